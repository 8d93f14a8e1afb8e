#include "intentkit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "intentkit/io.hpp"
#include "intentkit/text.hpp"

namespace intentkit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(DatagenError::Kind kind, const std::string& what) {
  throw DatagenError(kind, what);
}

constexpr std::pair<NoiseTag, std::string_view> kNoiseTagNames[] = {
    {NoiseTag::Typo, "typo"},         {NoiseTag::Slang, "slang"}, {NoiseTag::Greeting, "greeting"},
    {NoiseTag::Emoji, "emoji"},       {NoiseTag::Brand, "brand"}, {NoiseTag::Codeswitch, "codeswitch"},
};

const std::string* pick(const TextBank& bank, std::string_view language, Rng& rng) {
  const auto it = bank.find(std::string(language));
  if (it == bank.end() || it->second.empty()) return nullptr;
  return &it->second[rng.below(it->second.size())];
}

std::string dump_string(const std::string& s) {
  return json(s).dump(-1, ' ', false, json::error_handler_t::replace);
}

json bank_to_json(const TextBank& bank) {
  json j = json::object();
  for (const auto& [lang, entries] : bank) j[lang] = entries;
  return j;
}

}  // namespace

std::string_view to_string(NoiseTag t) {
  for (const auto& [tag, name] : kNoiseTagNames) {
    if (tag == t) return name;
  }
  return "unknown";
}

std::optional<NoiseTag> parse_noise_tag(std::string_view s) {
  for (const auto& [tag, name] : kNoiseTagNames) {
    if (name == s) return tag;
  }
  return std::nullopt;
}

QuantityWeights default_quantity_weights() {
  return {
      {1, 1, 0.40}, {2, 2, 0.18}, {3, 3, 0.12}, {4, 4, 0.08},
      {5, 5, 0.06}, {6, 6, 0.05}, {7, 12, 0.08}, {13, 50, 0.03},
  };
}

void validate_weights(const QuantityWeights& weights) {
  if (weights.empty()) fail(DatagenError::Kind::InvalidWeights, "quantity table is empty");
  double sum = 0.0;
  for (const auto& b : weights) {
    if (b.lo < 1 || b.hi < b.lo) {
      fail(DatagenError::Kind::InvalidWeights, "quantity bucket must satisfy 1 <= lo <= hi");
    }
    if (!(b.p >= 0.0) || !std::isfinite(b.p)) {
      fail(DatagenError::Kind::InvalidWeights, "quantity bucket probability must be >= 0");
    }
    sum += b.p;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    fail(DatagenError::Kind::InvalidWeights,
         "quantity weights sum to " + format_double(sum) + ", expected 1");
  }
}

std::int64_t sample_quantity(Rng& rng, const QuantityWeights& weights) {
  validate_weights(weights);
  const double u = rng.uniform01();
  double cumulative = 0.0;
  const QuantityBucket* chosen = &weights.back();
  for (const auto& b : weights) {
    cumulative += b.p;
    if (u < cumulative) {
      chosen = &b;
      break;
    }
  }
  // Rounding can leave u above the final cumulative sum; the last bucket with
  // mass absorbs it.
  if (chosen == &weights.back() && chosen->p == 0.0) {
    for (auto it = weights.rbegin(); it != weights.rend(); ++it) {
      if (it->p > 0.0) {
        chosen = &*it;
        break;
      }
    }
  }
  const auto span = static_cast<std::uint64_t>(chosen->hi - chosen->lo) + 1;
  return chosen->lo + static_cast<std::int64_t>(span == 1 ? 0 : rng.below(span));
}

std::string select_surface_form(const CatalogEntry& entry, std::int64_t quantity,
                                std::string_view language) {
  const auto it = entry.forms.find(std::string(language));
  if (it == entry.forms.end() || it->second.singular.empty()) {
    fail(DatagenError::Kind::MissingSurfaceForm,
         "'" + entry.canonical_name + "' has no " + std::string(language) + " singular form");
  }
  const SurfaceForms& f = it->second;
  if (quantity == 1) return f.singular;
  if (language == "hr" && quantity >= 2 && quantity <= 4) {
    if (f.paucal.empty()) {
      fail(DatagenError::Kind::MissingSurfaceForm,
           "'" + entry.canonical_name + "' has no hr paucal form");
    }
    return f.paucal;
  }
  if (!f.plural.empty()) return f.plural;
  if (language == "en") return f.singular + "s";
  if (language == "es") {
    const char last = f.singular.back();
    const bool vowel = last == 'a' || last == 'e' || last == 'i' || last == 'o' || last == 'u';
    return f.singular + (vowel ? "s" : "es");
  }
  fail(DatagenError::Kind::MissingSurfaceForm,
       "'" + entry.canonical_name + "' has no " + std::string(language) + " plural form");
}

std::string render_utterance(std::string_view tmpl, const CatalogEntry& entry,
                             std::int64_t quantity, std::string_view language,
                             std::optional<std::string_view> quantity_text) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const std::size_t open = tmpl.find('{', i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      fail(DatagenError::Kind::UnknownPlaceholder, "unterminated placeholder in template");
    }
    const std::string_view name = tmpl.substr(open + 1, close - open - 1);
    if (name == "qty") {
      out += quantity_text ? std::string(*quantity_text) : std::to_string(quantity);
    } else if (name == "product") {
      out += entry.canonical_name;
    } else if (name == "product_form") {
      out += select_surface_form(entry, quantity, language);
    } else {
      fail(DatagenError::Kind::UnknownPlaceholder, "unknown placeholder {" + std::string(name) + "}");
    }
    i = close + 1;
  }
  return out;
}

std::optional<std::string> inject_typo(std::string_view utterance, Rng& rng,
                                       std::optional<std::string_view> protected_word) {
  std::u32string cps = text::decode_utf8(utterance);
  const std::u32string guarded =
      protected_word ? text::to_lower(std::u32string_view(text::decode_utf8(*protected_word)))
                     : std::u32string{};
  struct Run {
    std::size_t begin, len;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < cps.size();) {
    if (!text::is_letter(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && text::is_letter(cps[j])) ++j;
    const bool touches_digit =
        (i > 0 && text::is_digit(cps[i - 1])) || (j < cps.size() && text::is_digit(cps[j]));
    const std::u32string_view run(cps.data() + i, j - i);
    const bool is_guarded = !guarded.empty() && text::to_lower(run) == guarded;
    if (j - i >= 2 && !touches_digit && !is_guarded) runs.push_back({i, j - i});
    i = j;
  }
  if (runs.empty()) return std::nullopt;

  const Run r = runs[rng.below(runs.size())];
  std::uint64_t op = rng.below(3);
  std::size_t swap_at = r.len;
  if (op == 1) {
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k + 1 < r.len; ++k) {
      if (cps[r.begin + k] != cps[r.begin + k + 1]) candidates.push_back(k);
    }
    if (candidates.empty()) {
      op = 0;
    } else {
      swap_at = candidates[rng.below(candidates.size())];
    }
  }
  switch (op) {
    case 0:  // drop
      cps.erase(r.begin + rng.below(r.len), 1);
      break;
    case 1:  // swap adjacent
      std::swap(cps[r.begin + swap_at], cps[r.begin + swap_at + 1]);
      break;
    default: {  // duplicate
      const std::size_t at = r.begin + rng.below(r.len);
      cps.insert(cps.begin() + static_cast<std::ptrdiff_t>(at), cps[at]);
      break;
    }
  }
  return text::encode_utf8(cps);
}

NoisyUtterance inject_noise(std::string_view utterance, const IntentRecord& record,
                            std::string_view language, const NoiseProfile& profile, Rng& rng,
                            std::optional<std::string_view> protected_word) {
  (void)record;  // the record is never rewritten; digits are protected by construction
  NoisyUtterance out{std::string(utterance), {}};

  if (rng.bernoulli(profile.p_linguistic)) {
    if (rng.below(2) == 0) {
      if (auto typo = inject_typo(out.text, rng, protected_word)) {
        out.text = std::move(*typo);
        out.tags.push_back(NoiseTag::Typo);
      }
    } else if (const std::string* slang = pick(profile.slang, language, rng)) {
      out.text += " " + *slang;
      out.tags.push_back(NoiseTag::Slang);
    }
  }

  if (rng.bernoulli(profile.p_codeswitch)) {
    std::vector<const std::string*> foreign;
    for (const auto& [lang, phrases] : profile.codeswitch_phrases) {
      if (lang == language) continue;
      for (const auto& p : phrases) foreign.push_back(&p);
    }
    if (!foreign.empty()) {
      out.text += " " + *foreign[rng.below(foreign.size())];
      out.tags.push_back(NoiseTag::Codeswitch);
    }
  }

  if (rng.bernoulli(profile.p_contextual)) {
    switch (rng.below(3)) {
      case 0:
        if (const std::string* g = pick(profile.greetings, language, rng)) {
          out.text = *g + " " + out.text;
          out.tags.push_back(NoiseTag::Greeting);
        }
        break;
      case 1:
        if (const std::string* e = pick(profile.emoji, language, rng)) {
          out.text += " " + *e;
          out.tags.push_back(NoiseTag::Emoji);
        }
        break;
      default:
        if (const std::string* b = pick(profile.brands, language, rng)) {
          out.text += " " + *b;
          out.tags.push_back(NoiseTag::Brand);
        }
        break;
    }
  }
  return out;
}

void validate_spec(const GenerationSpec& spec) {
  auto invalid = [](const std::string& what) { fail(DatagenError::Kind::InvalidSpec, what); };
  if (spec.languages.empty()) invalid("languages must be non-empty");
  if (spec.catalog.empty()) invalid("catalog must be non-empty");
  try {
    validate_weights(spec.quantity_weights);
  } catch (const DatagenError& e) {
    invalid(e.what());
  }
  for (double p : {spec.noise.p_linguistic, spec.noise.p_contextual, spec.noise.p_codeswitch}) {
    if (!(p >= 0.0 && p <= 1.0)) invalid("noise probabilities must lie in [0, 1]");
  }
  for (const auto& entry : spec.catalog) {
    if (text::trim(entry.canonical_name).empty()) invalid("catalog entry with empty canonical name");
    for (const auto& lang : spec.languages) {
      const auto it = entry.forms.find(lang);
      if (it == entry.forms.end() || it->second.singular.empty()) {
        invalid("'" + entry.canonical_name + "' has no " + lang + " singular form");
      }
    }
  }
  for (const auto& lang : spec.languages) {
    const auto it = spec.templates.by_language.find(lang);
    for (Action a : {Action::Add, Action::Remove}) {
      if (it == spec.templates.by_language.end() || !it->second.contains(a) ||
          it->second.at(a).empty()) {
        invalid("no " + std::string(to_string(a)) + " templates for language " + lang);
      }
    }
  }
  if (spec.number_words) {
    for (const auto& lang : spec.languages) {
      if (!spec.number_word_table.contains(lang)) invalid("no number words for language " + lang);
    }
  }
}

std::string spec_fingerprint(const GenerationSpec& spec) {
  json j;
  j["n_examples"] = spec.n_examples;
  j["languages"] = spec.languages;
  json catalog = json::array();
  for (const auto& e : spec.catalog) {
    json forms = json::object();
    for (const auto& [lang, f] : e.forms) {
      forms[lang] = {{"singular", f.singular}, {"paucal", f.paucal}, {"plural", f.plural}};
    }
    catalog.push_back({{"canonical", e.canonical_name}, {"forms", forms}});
  }
  j["catalog"] = catalog;
  json weights = json::array();
  for (const auto& b : spec.quantity_weights) weights.push_back({b.lo, b.hi, b.p});
  j["quantity_weights"] = weights;
  j["noise"] = {{"p_linguistic", spec.noise.p_linguistic},
                {"p_contextual", spec.noise.p_contextual},
                {"p_codeswitch", spec.noise.p_codeswitch},
                {"slang", bank_to_json(spec.noise.slang)},
                {"greetings", bank_to_json(spec.noise.greetings)},
                {"emoji", bank_to_json(spec.noise.emoji)},
                {"brands", bank_to_json(spec.noise.brands)},
                {"codeswitch", bank_to_json(spec.noise.codeswitch_phrases)}};
  json templates = json::object();
  for (const auto& [lang, by_action] : spec.templates.by_language) {
    for (const auto& [action, list] : by_action) {
      json arr = json::array();
      for (const auto& t : list) arr.push_back({t.text, t.style});
      templates[lang][std::string(to_string(action))] = arr;
    }
  }
  j["templates"] = templates;
  j["number_words"] = spec.number_words;
  return fingerprint(j.dump(-1, ' ', false, json::error_handler_t::replace));
}

Dataset generate_dataset(const GenerationSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);
  Dataset ds;
  ds.seed = spec.seed;
  ds.spec_fingerprint = spec_fingerprint(spec);
  ds.examples.reserve(spec.n_examples);

  for (std::size_t i = 0; i < spec.n_examples; ++i) {
    const std::string& language = spec.languages[i % spec.languages.size()];
    const Action action = rng.below(2) == 0 ? Action::Add : Action::Remove;
    const CatalogEntry& entry = spec.catalog[rng.below(spec.catalog.size())];
    const std::int64_t quantity = sample_quantity(rng, spec.quantity_weights);
    const auto& templates = spec.templates.by_language.at(language).at(action);
    const UtteranceTemplate& tmpl = templates[rng.below(templates.size())];

    std::optional<std::string> word;
    if (spec.number_words) {
      const auto& words = spec.number_word_table.at(language);
      if (const auto it = words.find(quantity); it != words.end()) word = it->second;
    }
    const IntentRecord record{action, entry.canonical_name, quantity};
    const std::string clean = render_utterance(tmpl.text, entry, quantity, language,
                                               word ? std::optional<std::string_view>(*word)
                                                    : std::nullopt);
    NoisyUtterance noisy = inject_noise(clean, record, language, spec.noise, rng,
                                        word ? std::optional<std::string_view>(*word)
                                             : std::nullopt);
    ds.examples.push_back(Example{std::move(noisy.text), record, language, std::move(noisy.tags)});
  }
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(DatagenError::Kind::InvalidSpec, "train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(ds.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  // The epsilon keeps products like 0.29 * 100 from flooring to 28.
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(order.size()) * train_fraction + 1e-9));

  std::pair<Dataset, Dataset> out;
  for (Dataset* part : {&out.first, &out.second}) {
    part->seed = ds.seed;
    part->spec_fingerprint = ds.spec_fingerprint;
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.first : out.second).examples.push_back(ds.examples[order[i]]);
  }
  return out;
}

std::string language_name(std::string_view code) {
  if (code == "en") return "English";
  if (code == "hr") return "Croatian";
  if (code == "es") return "Spanish";
  return std::string(code);
}

std::string build_metaprompt(const MetapromptParams& params) {
  std::string p;
  p += "You are generating training data for a shopping-cart assistant.\n";
  p += "Write ONE realistic message that a customer could send to an online shop.\n\n";
  p += "Required parameters:\n";
  p += "- Language: " + language_name(params.language) + " (" + params.language + ")\n";
  p += "- Action: " + std::string(to_string(params.action)) + "\n";
  p += "- Product: " + params.product + "\n";
  p += "- Quantity: " + std::to_string(params.quantity) + "\n";
  p += "- Style: " + (params.style.empty() ? std::string("neutral") : params.style) + "\n";
  if (!params.noise_directives.empty()) {
    p += "\nNoise to include:\n";
    for (NoiseTag t : params.noise_directives) {
      switch (t) {
        case NoiseTag::Typo:
          p += "- typo: misspell exactly one word (not the number)\n";
          break;
        case NoiseTag::Slang:
          p += "- slang: add chat slang such as \"pls\" or \"thx\"\n";
          break;
        case NoiseTag::Greeting:
          p += "- greeting: open with a short greeting\n";
          break;
        case NoiseTag::Emoji:
          p += "- emoji: include one emoji\n";
          break;
        case NoiseTag::Brand:
          p += "- brand: mention an unrelated brand name\n";
          break;
        case NoiseTag::Codeswitch:
          p += "- codeswitch: embed a short phrase from another language, e.g. \"free shipping\"\n";
          break;
      }
    }
  }
  p += "\nWrite the quantity as the digits \"" + std::to_string(params.quantity) + "\".\n";
  p += "Respond with a single JSON object and nothing else, using exactly this schema:\n";
  p += "{\"input\": \"<the customer message>\", \"output\": ";
  p += canonical_serialize(IntentRecord{params.action, params.product, params.quantity});
  p += "}\n";
  return p;
}

std::string to_jsonl_line(const Example& ex) {
  std::string line = "{\"input\":" + dump_string(ex.input);
  line += ",\"output\":" + canonical_serialize(ex.output);
  line += ",\"language\":" + dump_string(ex.language);
  line += ",\"noise_tags\":[";
  for (std::size_t i = 0; i < ex.noise_tags.size(); ++i) {
    if (i) line += ',';
    line += '"';
    line += to_string(ex.noise_tags[i]);
    line += '"';
  }
  line += "]}";
  return line;
}

std::string serialize_jsonl(const Dataset& ds) {
  std::string out;
  for (const auto& ex : ds.examples) {
    out += to_jsonl_line(ex);
    out += '\n';
  }
  return out;
}

Dataset parse_jsonl(std::string_view document) {
  Dataset ds;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= document.size()) {
    std::size_t nl = document.find('\n', pos);
    if (nl == std::string_view::npos) nl = document.size();
    const std::string line = text::trim(document.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto bad = [&](const std::string& what) {
      fail(DatagenError::Kind::InvalidData, "line " + std::to_string(line_no) + ": " + what);
    };
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) bad("not a JSON object");
    if (!j.contains("input") || !j["input"].is_string()) bad("missing string field 'input'");
    if (!j.contains("output") || !j["output"].is_object()) bad("missing object field 'output'");
    Example ex;
    ex.input = j["input"].get<std::string>();
    try {
      ex.output = parse_intent_json(j["output"].dump());
    } catch (const IntentParseError& e) {
      bad(std::string("invalid output record: ") + e.what());
    }
    ex.language = j.contains("language") && j["language"].is_string()
                      ? j["language"].get<std::string>()
                      : std::string("unknown");
    if (j.contains("noise_tags")) {
      if (!j["noise_tags"].is_array()) bad("noise_tags must be an array");
      for (const auto& t : j["noise_tags"]) {
        const auto tag = t.is_string() ? parse_noise_tag(t.get<std::string>()) : std::nullopt;
        if (!tag) bad("unknown noise tag " + t.dump());
        ex.noise_tags.push_back(*tag);
      }
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset load_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path)); }

namespace {

json load_json(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) fail(DatagenError::Kind::InvalidData, "'" + path.string() + "' is not valid JSON");
  return j;
}

TextBank bank_from_json(const json& j) {
  TextBank bank;
  if (!j.is_object()) return bank;
  for (const auto& [lang, entries] : j.items()) bank[lang] = entries.get<std::vector<std::string>>();
  return bank;
}

}  // namespace

std::vector<CatalogEntry> load_catalog(const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<CatalogEntry> out;
  try {
    for (const auto& e : j.at("entries")) {
      CatalogEntry entry;
      entry.canonical_name = e.at("canonical").get<std::string>();
      for (const auto& [lang, f] : e.at("forms").items()) {
        SurfaceForms forms;
        forms.singular = f.at("singular").get<std::string>();
        forms.paucal = f.value("paucal", "");
        forms.plural = f.value("plural", "");
        entry.forms[lang] = std::move(forms);
      }
      out.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    fail(DatagenError::Kind::InvalidData, "catalog '" + path.string() + "': " + e.what());
  }
  return out;
}

TemplateBank load_templates(const std::filesystem::path& path) {
  const json j = load_json(path);
  TemplateBank bank;
  try {
    for (const auto& [lang, by_action] : j.items()) {
      for (const auto& [action_name, list] : by_action.items()) {
        const auto action = parse_action(action_name);
        if (!action) fail(DatagenError::Kind::InvalidData, "unknown action '" + action_name + "'");
        auto& dest = bank.by_language[lang][*action];
        for (const auto& t : list) {
          dest.push_back({t.at("text").get<std::string>(), t.value("style", "")});
        }
      }
    }
  } catch (const json::exception& e) {
    fail(DatagenError::Kind::InvalidData, "templates '" + path.string() + "': " + e.what());
  }
  return bank;
}

NoiseProfile load_noise_banks(const std::filesystem::path& path) {
  const json j = load_json(path);
  NoiseProfile profile;
  try {
    profile.slang = bank_from_json(j.value("slang", json::object()));
    profile.greetings = bank_from_json(j.value("greetings", json::object()));
    profile.emoji = bank_from_json(j.value("emoji", json::object()));
    profile.brands = bank_from_json(j.value("brands", json::object()));
    profile.codeswitch_phrases = bank_from_json(j.value("codeswitch", json::object()));
  } catch (const json::exception& e) {
    fail(DatagenError::Kind::InvalidData, "noise banks '" + path.string() + "': " + e.what());
  }
  return profile;
}

NumberWordTable load_number_words(const std::filesystem::path& lexicon_path) {
  const json j = load_json(lexicon_path);
  NumberWordTable table;
  try {
    for (const auto& [lang, lex] : j.items()) {
      auto& dest = table[lang];
      // The first word listed for a value is the rendering form.
      for (const auto& entry : lex.at("numbers")) {
        const auto value = entry.at(1).get<std::int64_t>();
        dest.emplace(value, entry.at(0).get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    fail(DatagenError::Kind::InvalidData, "lexicons '" + lexicon_path.string() + "': " + e.what());
  }
  return table;
}

GenerationSpec default_generation_spec(const std::filesystem::path& data_dir) {
  GenerationSpec spec;
  spec.catalog = load_catalog(data_dir / "catalog.json");
  spec.templates = load_templates(data_dir / "templates.json");
  spec.noise = load_noise_banks(data_dir / "noise.json");
  spec.number_word_table = load_number_words(data_dir / "lexicons.json");
  return spec;
}

}  // namespace intentkit
