#include "intentkit/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "intentkit/io.hpp"

namespace intentkit {

using nlohmann::json;

std::string_view to_string(PromptMode m) {
  return m == PromptMode::FewShot ? "fewshot" : "raw";
}

std::optional<PromptMode> parse_prompt_mode(std::string_view s) {
  if (s == "fewshot") return PromptMode::FewShot;
  if (s == "raw") return PromptMode::Raw;
  return std::nullopt;
}

std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n, double z) {
  if (n < 1 || k < 0 || k > n || !(z > 0.0) || !std::isfinite(z)) {
    throw EvalError(EvalError::Kind::DomainError,
                    "wilson_interval requires 0 <= k <= n, n >= 1, z > 0");
  }
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  double low = k == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
  double high = k == n ? 1.0 : std::clamp(center + half, p, 1.0);
  return {low, high};
}

EvalReport aggregate_report(std::vector<ItemResult> items, double z) {
  if (items.empty()) throw EvalError(EvalError::Kind::EmptyDataset, "no items to aggregate");
  std::sort(items.begin(), items.end(),
            [](const ItemResult& a, const ItemResult& b) { return a.id < b.id; });

  EvalReport r;
  r.n_total = items.size();
  std::size_t action_ok = 0, product_ok = 0, quantity_ok = 0;
  for (const ItemResult& it : items) {
    LanguageStats& lang = r.per_language[it.language];
    ++lang.n_total;
    if (it.outcome.matched) {
      ++r.n_matched;
      ++lang.n_matched;
    } else {
      ++r.error_counts[it.outcome.error_class];
    }
    if (it.outcome.error_class == ErrorClass::BackendError) ++r.n_backend_errors;
    if (const auto& p = it.outcome.predicted) {
      action_ok += p->action == it.gold.action;
      product_ok += p->product == it.gold.product;
      quantity_ok += p->quantity == it.gold.quantity;
    }
  }
  const double n = static_cast<double>(r.n_total);
  r.accuracy = static_cast<double>(r.n_matched) / n;
  r.ci95 = wilson_interval(static_cast<std::int64_t>(r.n_matched),
                           static_cast<std::int64_t>(r.n_total), z);
  if (r.n_backend_errors < r.n_total) {
    r.accuracy_excluding_backend_errors =
        static_cast<double>(r.n_matched) / static_cast<double>(r.n_total - r.n_backend_errors);
  }
  for (auto& [_, lang] : r.per_language) {
    lang.accuracy = static_cast<double>(lang.n_matched) / static_cast<double>(lang.n_total);
  }
  r.field_accuracy = {static_cast<double>(action_ok) / n, static_cast<double>(product_ok) / n,
                      static_cast<double>(quantity_ok) / n};
  r.per_item = std::move(items);
  return r;
}

std::string build_prompt(const EvalConfig& config, std::string_view query) {
  if (config.prompt_mode == PromptMode::Raw) return std::string(query);
  return build_fewshot_prompt(config.shots, query, config.fewshot_k, config.shot_seed);
}

std::string eval_fingerprint(const Dataset& ds, const BackendConfig& backend,
                             const EvalConfig& config) {
  json shots = json::array();
  for (const Example& ex : config.shots) shots.push_back(to_jsonl_line(ex));
  const json j = {
      {"backend",
       {{"kind", to_string(backend.kind)},
        {"endpoint_url", backend.endpoint_url},
        {"model_name", backend.model_name},
        {"command_template", backend.command_template},
        {"temperature", backend.temperature},
        {"max_tokens", backend.max_tokens},
        {"timeout_ms", backend.timeout.count()},
        {"retries", backend.retries}}},
      {"prompt_mode", to_string(config.prompt_mode)},
      {"fewshot_k", config.fewshot_k},
      {"shot_seed", config.shot_seed},
      {"shots", fingerprint(shots.dump())},
      {"instruction", fewshot_instruction()},
      {"normalize_product", config.match.normalize_product},
      {"z", config.z},
      {"dataset", fingerprint(serialize_jsonl(ds))},
  };
  return fingerprint(j.dump(-1, ' ', false, json::error_handler_t::replace));
}

ItemResult score_item(std::size_t id, const Example& ex, const std::optional<std::string>& response,
                      const std::string& backend_error, const MatchOptions& options) {
  ItemResult it;
  it.id = id;
  it.language = ex.language;
  it.gold = ex.output;
  it.noise_tags = ex.noise_tags;
  if (response) {
    it.outcome = exact_match(*response, ex.output, options);
  } else {
    it.outcome = {false, ErrorClass::BackendError, std::nullopt};
    it.backend_error = backend_error;
  }
  return it;
}

EvalReport evaluate_dataset(const Dataset& ds, const BackendConfig& backend,
                            const EvalConfig& config) {
  if (ds.examples.empty()) throw EvalError(EvalError::Kind::EmptyDataset, "dataset is empty");
  if (config.parallelism < 1 || config.parallelism > 256) {
    throw EvalError(EvalError::Kind::ConfigError, "parallelism must be in [1, 256]");
  }
  if (!(config.z > 0.0)) throw EvalError(EvalError::Kind::ConfigError, "z must be positive");
  try {
    validate_config(backend);
    if (config.prompt_mode == PromptMode::FewShot) {
      build_fewshot_prompt(config.shots, "", config.fewshot_k, config.shot_seed);
    }
  } catch (const BackendError& e) {
    throw EvalError(EvalError::Kind::ConfigError, e.what());
  }

  const std::size_t n = ds.examples.size();
  std::vector<ItemResult> items(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const Example& ex = ds.examples[i];
      std::optional<std::string> response;
      std::string error;
      try {
        response = complete(backend, build_prompt(config, ex.input)).text;
      } catch (const BackendError& e) {
        error = std::string(to_string(e.kind())) + ": " + e.what();
      }
      items[i] = score_item(i, ex, response, error, config.match);
    }
  };
  const std::size_t n_threads = std::min(config.parallelism, n);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalReport report = aggregate_report(std::move(items), config.z);
  report.config_fingerprint = eval_fingerprint(ds, backend, config);
  return report;
}

namespace {

json record_json(const std::optional<IntentRecord>& r) {
  if (!r) return nullptr;
  return json::parse(canonical_serialize(*r));
}

}  // namespace

json to_json(const EvalReport& r) {
  json per_language = json::object();
  for (const auto& [lang, s] : r.per_language) {
    per_language[lang] = {{"n_total", s.n_total}, {"n_matched", s.n_matched}, {"accuracy", s.accuracy}};
  }
  json errors = json::object();
  for (const auto& [cls, count] : r.error_counts) errors[std::string(to_string(cls))] = count;
  json items = json::array();
  for (const ItemResult& it : r.per_item) {
    json tags = json::array();
    for (NoiseTag t : it.noise_tags) tags.push_back(to_string(t));
    json item = {
        {"id", it.id},
        {"language", it.language},
        {"matched", it.outcome.matched},
        {"error_class", to_string(it.outcome.error_class)},
        {"gold", record_json(it.gold)},
        {"predicted", record_json(it.outcome.predicted)},
        {"noise_tags", tags},
    };
    if (!it.backend_error.empty()) item["backend_error"] = it.backend_error;
    items.push_back(std::move(item));
  }
  return {
      {"n_total", r.n_total},
      {"n_matched", r.n_matched},
      {"accuracy", r.accuracy},
      {"ci95", {r.ci95.first, r.ci95.second}},
      {"n_backend_errors", r.n_backend_errors},
      {"accuracy_excluding_backend_errors",
       r.accuracy_excluding_backend_errors ? json(*r.accuracy_excluding_backend_errors) : json(nullptr)},
      {"per_language", per_language},
      {"field_accuracy",
       {{"action", r.field_accuracy.action},
        {"product", r.field_accuracy.product},
        {"quantity", r.field_accuracy.quantity}}},
      {"error_counts", errors},
      {"config_fingerprint", r.config_fingerprint},
      {"per_item", items},
  };
}

std::string format_table(const EvalReport& r) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "accuracy %.3f (%zu/%zu)   95%% CI [%.3f, %.3f]\n", r.accuracy,
                r.n_matched, r.n_total, r.ci95.first, r.ci95.second);
  out += line;
  if (r.n_backend_errors > 0) {
    std::snprintf(line, sizeof line, "backend errors %zu; accuracy over answered items %s\n",
                  r.n_backend_errors,
                  r.accuracy_excluding_backend_errors
                      ? format_fixed(*r.accuracy_excluding_backend_errors, 4).c_str()
                      : "n/a");
    out += line;
  }
  std::snprintf(line, sizeof line, "fields     action %.4f  product %.4f  quantity %.4f\n",
                r.field_accuracy.action, r.field_accuracy.product, r.field_accuracy.quantity);
  out += line;
  out += "\nlanguage       n  matched  accuracy\n";
  for (const auto& [lang, s] : r.per_language) {
    std::snprintf(line, sizeof line, "%-8s %7zu %8zu %9.4f\n", lang.c_str(), s.n_total, s.n_matched,
                  s.accuracy);
    out += line;
  }
  if (!r.error_counts.empty()) {
    out += "\nerror class          count\n";
    for (const auto& [cls, count] : r.error_counts) {
      std::snprintf(line, sizeof line, "%-18s %7zu\n", std::string(to_string(cls)).c_str(), count);
      out += line;
    }
  }
  return out;
}

std::string per_item_csv(const EvalReport& r) {
  std::string out = csv::join({"id", "language", "matched", "error_class", "gold", "predicted"});
  out.push_back('\n');
  for (const ItemResult& it : r.per_item) {
    out += csv::join({std::to_string(it.id), it.language, it.outcome.matched ? "true" : "false",
                      std::string(to_string(it.outcome.error_class)), canonical_serialize(it.gold),
                      it.outcome.predicted ? canonical_serialize(*it.outcome.predicted) : ""});
    out.push_back('\n');
  }
  return out;
}

}  // namespace intentkit
