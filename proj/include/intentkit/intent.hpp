#pragma once

// The intent record, its canonical wire form, and strict exact-match scoring.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace intentkit {

enum class Action { Add, Remove };

std::string_view to_string(Action a);
std::optional<Action> parse_action(std::string_view s);

struct IntentRecord {
  Action action = Action::Add;
  std::string product;
  std::int64_t quantity = 1;

  friend bool operator==(const IntentRecord&, const IntentRecord&) = default;
};

// True when the record satisfies the action/product/quantity invariants.
bool is_valid(const IntentRecord& r);

enum class ErrorClass {
  None,
  InvalidJson,
  SchemaViolation,
  WrongAction,
  WrongProduct,
  WrongQuantity,
  MultipleWrong,
  BackendError,
};

std::string_view to_string(ErrorClass c);
std::optional<ErrorClass> parse_error_class(std::string_view s);

struct MatchOutcome {
  bool matched = false;
  ErrorClass error_class = ErrorClass::InvalidJson;
  std::optional<IntentRecord> predicted;

  friend bool operator==(const MatchOutcome&, const MatchOutcome&) = default;
};

class IntentParseError : public std::runtime_error {
 public:
  enum class Kind { NoObjectFound, SchemaViolation };

  IntentParseError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Parses the first balanced `{...}` substring of `text` that is valid JSON.
// Throws IntentParseError.
IntentRecord parse_intent_json(std::string_view text);

// `{"action":A,"product":P,"quantity":N}`: fixed key order, no whitespace,
// non-ASCII kept as literal UTF-8.
std::string canonical_serialize(const IntentRecord& record);

struct MatchOptions {
  // Off by default: product comparison is byte-exact after trimming. When on,
  // products are compared after lowercasing and collapsing inner whitespace.
  bool normalize_product = false;
};

MatchOutcome exact_match(std::string_view prediction_text, const IntentRecord& gold,
                         const MatchOptions& options = {});

// Classifies an already-parsed prediction against gold.
MatchOutcome compare_records(const IntentRecord& predicted, const IntentRecord& gold,
                             const MatchOptions& options = {});

}  // namespace intentkit
