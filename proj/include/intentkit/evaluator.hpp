#pragma once

// Runs a dataset through a backend and aggregates exact-match accuracy.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentkit/backends.hpp"
#include "intentkit/datagen.hpp"
#include "intentkit/intent.hpp"

namespace intentkit {

class EvalError : public std::runtime_error {
 public:
  enum class Kind { EmptyDataset, ConfigError, DomainError };

  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class PromptMode {
  FewShot,  // instruction + k demonstrations + query
  Raw,      // the utterance alone, for models tuned on the bare task
};
std::string_view to_string(PromptMode m);
std::optional<PromptMode> parse_prompt_mode(std::string_view s);

struct EvalConfig {
  PromptMode prompt_mode = PromptMode::FewShot;
  std::size_t fewshot_k = 3;
  std::vector<Example> shots;
  std::uint64_t shot_seed = 0;
  std::size_t parallelism = 4;  // not part of the fingerprint
  MatchOptions match;
  double z = 1.96;
};

struct ItemResult {
  std::size_t id = 0;  // position in the dataset
  std::string language;
  IntentRecord gold;
  std::vector<NoiseTag> noise_tags;
  MatchOutcome outcome;
  std::string backend_error;  // set when outcome is BackendError
  friend bool operator==(const ItemResult&, const ItemResult&) = default;
};

struct LanguageStats {
  std::size_t n_total = 0;
  std::size_t n_matched = 0;
  double accuracy = 0.0;
  friend bool operator==(const LanguageStats&, const LanguageStats&) = default;
};

struct FieldAccuracy {
  double action = 0.0;
  double product = 0.0;
  double quantity = 0.0;
  friend bool operator==(const FieldAccuracy&, const FieldAccuracy&) = default;
};

struct EvalReport {
  std::size_t n_total = 0;
  std::size_t n_matched = 0;
  double accuracy = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  // Same ratio with BackendError items removed from the denominator.
  std::size_t n_backend_errors = 0;
  std::optional<double> accuracy_excluding_backend_errors;
  std::map<std::string, LanguageStats> per_language;
  std::map<ErrorClass, std::size_t> error_counts;  // non-None classes only
  FieldAccuracy field_accuracy;
  std::vector<ItemResult> per_item;  // sorted by id
  std::string config_fingerprint;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Throws EvalError{DomainError} unless 0 <= k <= n, n >= 1, z > 0.
std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n, double z);

// Pure function of the multiset of items; per_item comes back sorted by id.
EvalReport aggregate_report(std::vector<ItemResult> items, double z = 1.96);

// Prompt sent for one query under `config`.
std::string build_prompt(const EvalConfig& config, std::string_view query);

// Hash of everything that can change a score: backend settings, prompt
// construction, match options and the dataset itself.
std::string eval_fingerprint(const Dataset& ds, const BackendConfig& backend,
                             const EvalConfig& config);

// Scores one backend answer (or failure) against the gold record.
ItemResult score_item(std::size_t id, const Example& ex, const std::optional<std::string>& response,
                      const std::string& backend_error, const MatchOptions& options);

// Throws EvalError{EmptyDataset, ConfigError}. Backend failures after retries
// are scored as BackendError mismatches, never thrown.
EvalReport evaluate_dataset(const Dataset& ds, const BackendConfig& backend,
                            const EvalConfig& config);

nlohmann::json to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);
// Columns: id, language, matched, error_class, gold, predicted.
std::string per_item_csv(const EvalReport& report);

}  // namespace intentkit
