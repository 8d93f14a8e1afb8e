#pragma once

// Pareto frontiers over model variants.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace intentkit {

class ParetoError : public std::runtime_error {
 public:
  enum class Kind { EmptyInput, BadObjective, InvalidPoint, UnsupportedFormat, ParseError };

  ParetoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct VariantPoint {
  std::string name;
  double accuracy = 0.0;
  double speed_tps = 0.0;
  double memory_bytes = 0.0;
  friend bool operator==(const VariantPoint&, const VariantPoint&) = default;
};

enum class Metric { Accuracy, Speed, Memory };
enum class Direction { Maximize, Minimize };

struct Objective {
  Metric metric = Metric::Accuracy;
  Direction direction = Direction::Maximize;
};

// Memory is minimised, accuracy and speed maximised.
Objective default_objective(Metric m);
std::string_view to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view s);
// Comma-separated metric names, e.g. "accuracy,speed", or with an explicit
// direction suffix "memory:max". Throws BadObjective.
std::vector<Objective> parse_objectives(std::string_view s);

double metric_value(const VariantPoint& p, Metric m);

// True when `p` is at least as good as `q` on every objective and strictly
// better on one.
bool dominates(const VariantPoint& p, const VariantPoint& q, const std::vector<Objective>& objectives);

struct FrontierResult {
  std::vector<VariantPoint> points;  // input order
  std::vector<Objective> objectives;
  std::vector<bool> on_frontier;
  // For dominated points: the frontier point with the largest smallest
  // range-normalised margin over it (earliest input index on ties).
  std::vector<std::optional<std::size_t>> dominated_by;
};

// Throws EmptyInput, BadObjective (< 2 objectives or a repeated metric) or
// InvalidPoint (non-finite or negative metric).
FrontierResult compute_frontier(const std::vector<VariantPoint>& points,
                                const std::vector<Objective>& objectives);

enum class ReportFormat { Text, Csv, Json };
// Throws UnsupportedFormat.
ReportFormat parse_report_format(std::string_view s);

struct Recommendations {
  std::optional<std::size_t> best_accuracy;
  std::optional<std::size_t> best_speed;
};
Recommendations recommend(const FrontierResult& r);

// Columns: name, accuracy, speed_tps, memory_bytes, on_frontier, dominated_by.
std::string frontier_csv(const FrontierResult& r);
std::string emit_tradeoff_report(const FrontierResult& r, ReportFormat format);

// Reads the CSV columns above (extra columns ignored) or a JSON array of
// objects with the same keys. Throws ParseError / InvalidPoint.
std::vector<VariantPoint> parse_points_csv(std::string_view document);
std::vector<VariantPoint> parse_points_json(std::string_view document);

}  // namespace intentkit
