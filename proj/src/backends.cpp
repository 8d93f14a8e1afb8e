#include "intentkit/backends.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>
#include <thread>

#include "intentkit/io.hpp"
#include "intentkit/rng.hpp"
#include "intentkit/text.hpp"

namespace intentkit {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Defined in http_client.cpp so only one translation unit pulls in httplib.
CompletionResult complete_http(const BackendConfig& config, std::string_view prompt);

std::string_view to_string(BackendError::Kind k) {
  switch (k) {
    case BackendError::Kind::InvalidConfig: return "InvalidConfig";
    case BackendError::Kind::Timeout: return "Timeout";
    case BackendError::Kind::TransportError: return "TransportError";
    case BackendError::Kind::NonZeroExit: return "NonZeroExit";
    case BackendError::Kind::MalformedResponse: return "MalformedResponse";
    case BackendError::Kind::NoActionFound: return "NoActionFound";
    case BackendError::Kind::NoProductFound: return "NoProductFound";
    case BackendError::Kind::InsufficientShots: return "InsufficientShots";
  }
  return "Unknown";
}

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Http: return "http";
    case BackendKind::Subprocess: return "subprocess";
    case BackendKind::Oracle: return "oracle";
  }
  return "unknown";
}

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "http") return BackendKind::Http;
  if (s == "subprocess") return BackendKind::Subprocess;
  if (s == "oracle") return BackendKind::Oracle;
  return std::nullopt;
}

Lexicons load_lexicons(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DatagenError(DatagenError::Kind::InvalidData, "'" + path.string() + "' is not a JSON object");
  }
  Lexicons out;
  try {
    for (const auto& [lang, lex] : j.items()) {
      LanguageLexicon l;
      l.add_verbs = lex.at("add").get<std::vector<std::string>>();
      l.remove_verbs = lex.at("remove").get<std::vector<std::string>>();
      for (const auto& n : lex.value("numbers", json::array())) {
        l.number_words.emplace_back(n.at(0).get<std::string>(), n.at(1).get<std::int64_t>());
      }
      out[lang] = std::move(l);
    }
  } catch (const json::exception& e) {
    throw DatagenError(DatagenError::Kind::InvalidData, "lexicons '" + path.string() + "': " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

std::u32string join_tokens(const std::vector<text::Token>& tokens, std::size_t begin,
                           std::size_t count) {
  std::u32string out;
  for (std::size_t i = begin; i < begin + count; ++i) {
    if (i > begin) out.push_back(U' ');
    out += tokens[i].text;
  }
  return out;
}

std::u32string normalize_phrase(std::string_view s) {
  const auto tokens = text::word_tokens(s);
  return join_tokens(tokens, 0, tokens.size());
}

// Edit budget for a lexicon verb: short verbs must match exactly.
std::size_t verb_budget(std::size_t len) {
  if (len <= 3) return 0;
  if (len <= 5) return 1;
  return 2;
}

constexpr double kProductThreshold = 0.34;

}  // namespace

OracleParser::OracleParser(std::vector<CatalogEntry> catalog, Lexicons lexicons)
    : catalog_(std::move(catalog)) {
  for (std::size_t e = 0; e < catalog_.size(); ++e) {
    std::vector<std::u32string> seen;
    auto add_form = [&](const std::string& s) {
      if (s.empty()) return;
      std::u32string norm = normalize_phrase(s);
      if (norm.empty() || std::find(seen.begin(), seen.end(), norm) != seen.end()) return;
      const auto n_tokens = static_cast<std::size_t>(std::count(norm.begin(), norm.end(), U' ')) + 1;
      max_form_tokens_ = std::max(max_form_tokens_, n_tokens);
      seen.push_back(norm);
      forms_.push_back({std::move(norm), n_tokens, e});
    };
    add_form(catalog_[e].canonical_name);
    for (const auto& [lang, f] : catalog_[e].forms) {
      add_form(f.singular);
      add_form(f.paucal);
      try {
        add_form(select_surface_form(catalog_[e], 5, lang));
      } catch (const DatagenError&) {
        // no plural for this language; singular/paucal still index the entry
      }
    }
  }
  for (const auto& [lang, lex] : lexicons) {
    for (const auto& v : lex.add_verbs) verbs_.push_back({normalize_phrase(v), Action::Add});
    for (const auto& v : lex.remove_verbs) verbs_.push_back({normalize_phrase(v), Action::Remove});
    for (const auto& [word, value] : lex.number_words) {
      number_words_.emplace(normalize_phrase(word), value);
    }
  }
}

IntentRecord OracleParser::parse(std::string_view utterance) const {
  const auto tokens = text::word_tokens(utterance);

  // Action.
  std::optional<Action> action;
  for (const auto& tok : tokens) {
    if (tok.numeric) continue;
    const auto it = std::find_if(verbs_.begin(), verbs_.end(),
                                 [&](const Verb& v) { return v.text == tok.text; });
    if (it != verbs_.end()) {
      action = it->action;
      break;
    }
  }
  if (!action) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tok : tokens) {
      if (tok.numeric || tok.text.size() < 2) continue;
      for (const auto& v : verbs_) {
        const std::size_t budget = verb_budget(v.text.size());
        if (budget == 0) continue;
        const std::size_t len_gap = tok.text.size() > v.text.size() ? tok.text.size() - v.text.size()
                                                                      : v.text.size() - tok.text.size();
        if (len_gap > budget) continue;
        const std::size_t d = text::osa_distance(tok.text, v.text);
        if (d > budget) continue;
        const double score =
            static_cast<double>(d) / static_cast<double>(std::max(tok.text.size(), v.text.size()));
        if (score < best) {
          best = score;
          action = v.action;
        }
      }
    }
  }
  if (!action) {
    throw BackendError(BackendError::Kind::NoActionFound, "no add/remove verb recognised");
  }

  // Product.
  std::map<std::u32string, std::vector<std::size_t>> windows_by_size;
  std::optional<std::size_t> best_form;
  double best_score = std::numeric_limits<double>::infinity();
  auto better = [&](std::size_t candidate, double score) {
    if (!best_form || score < best_score) return true;
    if (score > best_score) return false;
    const Form& a = forms_[candidate];
    const Form& b = forms_[*best_form];
    if (a.text.size() != b.text.size()) return a.text.size() > b.text.size();
    return a.entry < b.entry;
  };
  std::vector<std::vector<std::u32string>> windows(max_form_tokens_ + 1);
  for (std::size_t w = 1; w <= max_form_tokens_; ++w) {
    for (std::size_t i = 0; i + w <= tokens.size(); ++i) windows[w].push_back(join_tokens(tokens, i, w));
  }
  for (std::size_t f = 0; f < forms_.size(); ++f) {
    for (const auto& win : windows[forms_[f].n_tokens]) {
      if (win == forms_[f].text && better(f, 0.0)) {
        best_form = f;
        best_score = 0.0;
      }
    }
  }
  if (!best_form) {
    for (std::size_t f = 0; f < forms_.size(); ++f) {
      const std::u32string& form = forms_[f].text;
      for (const auto& win : windows[forms_[f].n_tokens]) {
        const double longest = static_cast<double>(std::max(win.size(), form.size()));
        const double len_gap =
            static_cast<double>(win.size() > form.size() ? win.size() - form.size() : form.size() - win.size());
        if (len_gap / longest > std::min(best_score, kProductThreshold)) continue;
        const double score = static_cast<double>(text::osa_distance(win, form)) / longest;
        if (score <= kProductThreshold && better(f, score)) {
          best_form = f;
          best_score = score;
        }
      }
    }
  }
  if (!best_form) {
    throw BackendError(BackendError::Kind::NoProductFound, "no catalog product recognised");
  }

  // Quantity.
  std::optional<std::int64_t> quantity;
  for (const auto& tok : tokens) {
    if (!tok.numeric || tok.text.size() > 18) continue;
    std::int64_t v = 0;
    for (char32_t c : tok.text) v = v * 10 + static_cast<std::int64_t>(c - U'0');
    if (v >= 1) {
      quantity = v;
      break;
    }
  }
  if (!quantity) {
    for (const auto& tok : tokens) {
      if (const auto it = number_words_.find(tok.text); !tok.numeric && it != number_words_.end()) {
        quantity = it->second;
        break;
      }
    }
  }

  return IntentRecord{*action, catalog_[forms_[*best_form].entry].canonical_name, quantity.value_or(1)};
}

IntentRecord oracle_parse(std::string_view utterance, const std::vector<CatalogEntry>& catalog,
                          const Lexicons& lexicons) {
  return OracleParser(catalog, lexicons).parse(utterance);
}

// ---------------------------------------------------------------------------
// Prompting

std::string_view fewshot_instruction() {
  return "You convert a customer's shopping-cart message into JSON.\n"
         "Reply with exactly one JSON object with the keys \"action\" (\"add\" or \"remove\"), "
         "\"product\" (the canonical catalog product name, in English) and \"quantity\" "
         "(a positive integer; 1 if no number is given). Output nothing but the JSON object.";
}

std::string build_fewshot_prompt(const std::vector<Example>& shots, std::string_view query,
                                 std::size_t k, std::uint64_t seed) {
  if (shots.size() < k) {
    throw BackendError(BackendError::Kind::InsufficientShots,
                       "need " + std::to_string(k) + " shots, have " + std::to_string(shots.size()));
  }
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    groups[{shots[i].language, static_cast<int>(shots[i].output.action)}].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>*> queues;
  for (auto& [_, members] : groups) {
    rng.shuffle(std::span<std::size_t>(members));
    queues.push_back(&members);
  }
  std::vector<std::size_t> chosen;
  for (std::size_t round = 0; chosen.size() < k; ++round) {
    for (auto* q : queues) {
      if (chosen.size() == k) break;
      if (round < q->size()) chosen.push_back((*q)[round]);
    }
  }

  std::string p(fewshot_instruction());
  p += "\n\n";
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const Example& ex = shots[chosen[i]];
    p += std::string(kDemonstrationSeparator) + " " + std::to_string(i + 1) + "\n";
    p += "Input: " + ex.input + "\n";
    p += "Output: " + canonical_serialize(ex.output) + "\n\n";
  }
  p += "### Query\nInput: ";
  p += query;
  p += "\nOutput:";
  return p;
}

std::string extract_query(std::string_view prompt) {
  constexpr std::string_view marker = "Input:";
  std::size_t pos = std::string_view::npos;
  for (std::size_t at = prompt.find(marker); at != std::string_view::npos;
       at = prompt.find(marker, at + 1)) {
    if (at == 0 || prompt[at - 1] == '\n') pos = at;
  }
  if (pos != std::string_view::npos) {
    const std::size_t begin = pos + marker.size();
    const std::size_t end = prompt.find('\n', begin);
    return text::trim(prompt.substr(begin, end == std::string_view::npos ? end : end - begin));
  }
  std::string last;
  std::size_t start = 0;
  while (start <= prompt.size()) {
    std::size_t nl = prompt.find('\n', start);
    if (nl == std::string_view::npos) nl = prompt.size();
    if (std::string line = text::trim(prompt.substr(start, nl - start)); !line.empty()) {
      last = std::move(line);
    }
    start = nl + 1;
  }
  return last;
}

std::int64_t count_tokens_fallback(std::string_view s) {
  return static_cast<std::int64_t>(text::count_whitespace_tokens(s));
}

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

// ---------------------------------------------------------------------------
// Completion

void validate_config(const BackendConfig& config) {
  auto invalid = [](const std::string& what) {
    throw BackendError(BackendError::Kind::InvalidConfig, what);
  };
  if (config.temperature < 0.0) invalid("temperature must be >= 0");
  if (config.retries < 0) invalid("retries must be >= 0");
  if (config.timeout.count() <= 0) invalid("timeout must be positive");
  switch (config.kind) {
    case BackendKind::Http:
      if (config.endpoint_url.empty() || config.model_name.empty()) {
        invalid("http backend requires endpoint_url and model_name");
      }
      break;
    case BackendKind::Subprocess:
      if (config.command_template.find("{prompt}") == std::string::npos) {
        invalid("subprocess backend requires a command_template containing {prompt}");
      }
      break;
    case BackendKind::Oracle:
      if (!config.oracle) invalid("oracle backend requires catalog and lexicons");
      break;
  }
}

namespace {

CompletionResult complete_subprocess(const BackendConfig& config, std::string_view prompt,
                                     const ProcessObserver* observer) {
  std::string command;
  const std::string& tmpl = config.command_template;
  const std::string quoted = shell_quote(prompt);
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.compare(i, 8, "{prompt}") == 0) {
      command += quoted;
      i += 8;
    } else {
      command.push_back(tmpl[i++]);
    }
  }
  ProcessResult pr = run_shell(command, config.timeout, observer);
  if (pr.exit_code != 0) {
    std::string detail = text::trim(pr.err);
    if (detail.size() > 200) detail.resize(200);
    throw BackendError(BackendError::Kind::NonZeroExit,
                       pr.term_signal != 0
                           ? "command killed by signal " + std::to_string(pr.term_signal)
                           : "command exited with status " + std::to_string(pr.exit_code) +
                                 (detail.empty() ? "" : ": " + detail));
  }
  CompletionResult r;
  while (!pr.out.empty() && (pr.out.back() == '\n' || pr.out.back() == '\r')) pr.out.pop_back();
  r.text = std::move(pr.out);
  r.token_count_exact = false;
  r.first_byte_latency = pr.first_byte;
  r.total_latency = pr.total;
  return r;
}

CompletionResult complete_oracle(const BackendConfig& config, std::string_view prompt) {
  const auto start = Clock::now();
  const IntentRecord record = config.oracle->parse(extract_query(prompt));
  CompletionResult r;
  r.text = canonical_serialize(record);
  r.token_count_exact = false;
  r.total_latency = Clock::now() - start;
  r.first_byte_latency = r.total_latency;
  return r;
}

bool retryable(BackendError::Kind k) {
  return k == BackendError::Kind::Timeout || k == BackendError::Kind::TransportError ||
         k == BackendError::Kind::NonZeroExit || k == BackendError::Kind::MalformedResponse;
}

}  // namespace

CompletionResult complete_once(const BackendConfig& config, std::string_view prompt,
                               const ProcessObserver* observer) {
  validate_config(config);
  switch (config.kind) {
    case BackendKind::Http: return complete_http(config, prompt);
    case BackendKind::Subprocess: return complete_subprocess(config, prompt, observer);
    case BackendKind::Oracle: return complete_oracle(config, prompt);
  }
  throw BackendError(BackendError::Kind::InvalidConfig, "unknown backend kind");
}

CompletionResult complete(const BackendConfig& config, std::string_view prompt,
                          const ProcessObserver* observer) {
  validate_config(config);
  auto backoff = config.retry_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      CompletionResult r = complete_once(config, prompt, observer);
      r.attempts = attempt;
      return r;
    } catch (const BackendError& e) {
      if (!retryable(e.kind()) || attempt > config.retries) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace intentkit
