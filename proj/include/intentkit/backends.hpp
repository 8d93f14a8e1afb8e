#pragma once

// Inference backends behind one `complete` call: a chat-completions HTTP
// client, a subprocess runner, and a deterministic rule-based oracle.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "intentkit/datagen.hpp"
#include "intentkit/intent.hpp"
#include "intentkit/subprocess.hpp"

namespace intentkit {

class BackendError : public std::runtime_error {
 public:
  enum class Kind {
    InvalidConfig,
    Timeout,
    TransportError,
    NonZeroExit,
    MalformedResponse,
    NoActionFound,
    NoProductFound,
    InsufficientShots,
  };

  BackendError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(BackendError::Kind k);

struct LanguageLexicon {
  std::vector<std::string> add_verbs;
  std::vector<std::string> remove_verbs;
  std::vector<std::pair<std::string, std::int64_t>> number_words;
};

using Lexicons = std::map<std::string, LanguageLexicon>;

Lexicons load_lexicons(const std::filesystem::path& path);

// Deterministic ground-truth solver used to self-check the harness.
//   action:   verb-lexicon hit; exact hits win, otherwise the closest verb
//             within a length-scaled edit budget (<= 2), earliest token on ties
//   product:  catalog surface form closest to a token window by normalized
//             edit distance; ties -> longest form, then catalog order
//   quantity: first digit token, else first number word, else 1
// Throws BackendError (NoActionFound / NoProductFound).
IntentRecord oracle_parse(std::string_view utterance, const std::vector<CatalogEntry>& catalog,
                          const Lexicons& lexicons);

// Precomputed index for repeated oracle calls over one catalog.
class OracleParser {
 public:
  OracleParser(std::vector<CatalogEntry> catalog, Lexicons lexicons);
  IntentRecord parse(std::string_view utterance) const;

 private:
  struct Form {
    std::u32string text;  // lowercased, tokens joined by single spaces
    std::size_t n_tokens;
    std::size_t entry;
  };
  struct Verb {
    std::u32string text;
    Action action;
  };
  std::vector<CatalogEntry> catalog_;
  std::vector<Form> forms_;
  std::vector<Verb> verbs_;
  std::map<std::u32string, std::int64_t> number_words_;
  std::size_t max_form_tokens_ = 1;
};

enum class BackendKind { Http, Subprocess, Oracle };
std::string_view to_string(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

struct BackendConfig {
  BackendKind kind = BackendKind::Oracle;
  std::string endpoint_url;      // http
  std::string model_name;        // http
  std::string api_key_env = "OPENAI_API_KEY";
  std::string command_template;  // subprocess; contains {prompt}
  double temperature = 0.0;
  int max_tokens = 64;
  std::chrono::milliseconds timeout{30'000};
  int retries = 2;
  std::chrono::milliseconds retry_backoff{200};  // doubled per attempt
  std::shared_ptr<const OracleParser> oracle;    // oracle
};

void validate_config(const BackendConfig& config);

struct CompletionResult {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  bool token_count_exact = false;
  std::chrono::nanoseconds first_byte_latency{0};
  std::chrono::nanoseconds total_latency{0};
  // Decode time reported by the server (llama.cpp-style `timings.predicted_ms`).
  std::optional<std::chrono::nanoseconds> server_generation_time;
  int attempts = 1;
};

// Lets callers observe subprocess lifetimes; the profiler samples the child's
// memory through these hooks.
using ProcessObserver = SpawnHooks;

// Issues at most 1 + config.retries attempts; the last error is rethrown.
CompletionResult complete(const BackendConfig& config, std::string_view prompt,
                          const ProcessObserver* observer = nullptr);

// Single attempt, no retry.
CompletionResult complete_once(const BackendConfig& config, std::string_view prompt,
                               const ProcessObserver* observer = nullptr);

// Text after the last "Input:" line marker, else the last non-empty line.
std::string extract_query(std::string_view prompt);

std::int64_t count_tokens_fallback(std::string_view text);

// The fixed task instruction that heads every few-shot prompt.
std::string_view fewshot_instruction();
inline constexpr std::string_view kDemonstrationSeparator = "### Example";

// Instruction, k demonstrations (canonical JSON outputs), then the query.
// Shots are drawn round-robin over (language, action) groups, each group
// shuffled with `seed`. Throws BackendError{InsufficientShots}.
std::string build_fewshot_prompt(const std::vector<Example>& shots, std::string_view query,
                                 std::size_t k, std::uint64_t seed = 0);

// POSIX shell single-quoting.
std::string shell_quote(std::string_view s);

}  // namespace intentkit
