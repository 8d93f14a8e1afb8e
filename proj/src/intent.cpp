#include "intentkit/intent.hpp"

#include <array>
#include <cmath>
#include <nlohmann/json.hpp>

#include "intentkit/text.hpp"

namespace intentkit {

using nlohmann::json;

std::string_view to_string(Action a) { return a == Action::Add ? "add" : "remove"; }

std::optional<Action> parse_action(std::string_view s) {
  if (s == "add") return Action::Add;
  if (s == "remove") return Action::Remove;
  return std::nullopt;
}

bool is_valid(const IntentRecord& r) {
  return (r.action == Action::Add || r.action == Action::Remove) && r.quantity >= 1 &&
         !text::trim(r.product).empty();
}

namespace {

constexpr std::array<std::pair<ErrorClass, std::string_view>, 8> kErrorClassNames{{
    {ErrorClass::None, "None"},
    {ErrorClass::InvalidJson, "InvalidJson"},
    {ErrorClass::SchemaViolation, "SchemaViolation"},
    {ErrorClass::WrongAction, "WrongAction"},
    {ErrorClass::WrongProduct, "WrongProduct"},
    {ErrorClass::WrongQuantity, "WrongQuantity"},
    {ErrorClass::MultipleWrong, "MultipleWrong"},
    {ErrorClass::BackendError, "BackendError"},
}};

// End index (exclusive) of the balanced object starting at `begin`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t begin) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

[[noreturn]] void schema_error(const std::string& what) {
  throw IntentParseError(IntentParseError::Kind::SchemaViolation, what);
}

std::int64_t integral_quantity(const json& q) {
  if (q.is_number_unsigned()) {
    const auto v = q.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(INT64_MAX)) schema_error("quantity out of range");
    return static_cast<std::int64_t>(v);
  }
  if (q.is_number_integer()) return q.get<std::int64_t>();
  if (q.is_number_float()) {
    const double d = q.get<double>();
    if (!std::isfinite(d) || std::trunc(d) != d || std::fabs(d) > 0x1.0p53) {
      schema_error("quantity is not an integer");
    }
    return static_cast<std::int64_t>(d);
  }
  schema_error("quantity must be a JSON number");
}

IntentRecord record_from_object(const json& obj) {
  for (const auto& [key, _] : obj.items()) {
    if (key != "action" && key != "product" && key != "quantity") {
      schema_error("unexpected key '" + key + "'");
    }
  }
  for (const char* key : {"action", "product", "quantity"}) {
    if (!obj.contains(key)) schema_error(std::string("missing key '") + key + "'");
  }
  const json& a = obj["action"];
  const json& p = obj["product"];
  if (!a.is_string()) schema_error("action must be a string");
  if (!p.is_string()) schema_error("product must be a string");
  const auto action = parse_action(a.get_ref<const std::string&>());
  if (!action) schema_error("unknown action '" + a.get<std::string>() + "'");
  IntentRecord r{*action, p.get<std::string>(), integral_quantity(obj["quantity"])};
  if (text::trim(r.product).empty()) schema_error("product is empty");
  if (r.quantity < 1) schema_error("quantity must be >= 1");
  return r;
}

std::string normalized_product(std::string_view s) {
  const std::string lowered = text::to_lower(text::trim(s));
  std::string out;
  bool pending_space = false;
  for (char c : lowered) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string_view to_string(ErrorClass c) {
  for (const auto& [cls, name] : kErrorClassNames) {
    if (cls == c) return name;
  }
  return "Unknown";
}

std::optional<ErrorClass> parse_error_class(std::string_view s) {
  for (const auto& [cls, name] : kErrorClassNames) {
    if (name == s) return cls;
  }
  return std::nullopt;
}

IntentRecord parse_intent_json(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    const std::size_t end = balanced_end(text, start);
    if (end == std::string_view::npos) continue;
    json obj = json::parse(text.substr(start, end - start), nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) continue;
    return record_from_object(obj);
  }
  throw IntentParseError(IntentParseError::Kind::NoObjectFound,
                         "no balanced JSON object found in model output");
}

std::string canonical_serialize(const IntentRecord& record) {
  const auto quote = [](const std::string& s) {
    return json(s).dump(-1, ' ', false, json::error_handler_t::replace);
  };
  std::string out = "{\"action\":\"";
  out += to_string(record.action);
  out += "\",\"product\":";
  out += quote(record.product);
  out += ",\"quantity\":";
  out += std::to_string(record.quantity);
  out += '}';
  return out;
}

MatchOutcome compare_records(const IntentRecord& predicted, const IntentRecord& gold,
                             const MatchOptions& options) {
  const bool action_ok = predicted.action == gold.action;
  const bool product_ok =
      options.normalize_product
          ? normalized_product(predicted.product) == normalized_product(gold.product)
          : text::trim(predicted.product) == text::trim(gold.product);
  const bool quantity_ok = predicted.quantity == gold.quantity;
  const int wrong = !action_ok + !product_ok + !quantity_ok;

  MatchOutcome out;
  out.predicted = predicted;
  out.matched = wrong == 0;
  if (wrong == 0) {
    out.error_class = ErrorClass::None;
  } else if (wrong > 1) {
    out.error_class = ErrorClass::MultipleWrong;
  } else if (!action_ok) {
    out.error_class = ErrorClass::WrongAction;
  } else if (!product_ok) {
    out.error_class = ErrorClass::WrongProduct;
  } else {
    out.error_class = ErrorClass::WrongQuantity;
  }
  return out;
}

MatchOutcome exact_match(std::string_view prediction_text, const IntentRecord& gold,
                         const MatchOptions& options) {
  try {
    return compare_records(parse_intent_json(prediction_text), gold, options);
  } catch (const IntentParseError& e) {
    MatchOutcome out;
    out.error_class = e.kind() == IntentParseError::Kind::NoObjectFound
                          ? ErrorClass::InvalidJson
                          : ErrorClass::SchemaViolation;
    return out;
  }
}

}  // namespace intentkit
