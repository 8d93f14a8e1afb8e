#include "intentkit/pareto.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "intentkit/io.hpp"
#include "intentkit/text.hpp"

namespace intentkit {

using nlohmann::json;

Objective default_objective(Metric m) {
  return {m, m == Metric::Memory ? Direction::Minimize : Direction::Maximize};
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Accuracy: return "accuracy";
    case Metric::Speed: return "speed";
    case Metric::Memory: return "memory";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view s) {
  if (s == "accuracy") return Metric::Accuracy;
  if (s == "speed") return Metric::Speed;
  if (s == "memory") return Metric::Memory;
  return std::nullopt;
}

std::vector<Objective> parse_objectives(std::string_view s) {
  std::vector<Objective> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    const std::string item = text::trim(s.substr(start, comma - start));
    const auto colon = item.find(':');
    const auto m = parse_metric(item.substr(0, colon));
    if (!m) throw ParetoError(ParetoError::Kind::BadObjective, "unknown metric '" + item + "'");
    Objective o = default_objective(*m);
    if (colon != std::string::npos) {
      const std::string dir = item.substr(colon + 1);
      if (dir == "max") {
        o.direction = Direction::Maximize;
      } else if (dir == "min") {
        o.direction = Direction::Minimize;
      } else {
        throw ParetoError(ParetoError::Kind::BadObjective, "direction must be min or max: '" + item + "'");
      }
    }
    for (const Objective& prev : out) {
      if (prev.metric == o.metric) {
        throw ParetoError(ParetoError::Kind::BadObjective, "metric '" + item + "' given twice");
      }
    }
    out.push_back(o);
    start = comma + 1;
  }
  if (out.size() < 2) throw ParetoError(ParetoError::Kind::BadObjective, "need at least two objectives");
  return out;
}

double metric_value(const VariantPoint& p, Metric m) {
  switch (m) {
    case Metric::Accuracy: return p.accuracy;
    case Metric::Speed: return p.speed_tps;
    case Metric::Memory: return p.memory_bytes;
  }
  return 0.0;
}

namespace {

// Objective value oriented so that larger is better.
double score(const VariantPoint& p, const Objective& o) {
  const double v = metric_value(p, o.metric);
  return o.direction == Direction::Maximize ? v : -v;
}

void validate(const std::vector<VariantPoint>& points, const std::vector<Objective>& objectives) {
  if (points.empty()) throw ParetoError(ParetoError::Kind::EmptyInput, "no variants given");
  if (objectives.size() < 2) {
    throw ParetoError(ParetoError::Kind::BadObjective, "at least two objectives are required");
  }
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (objectives[i].metric == objectives[j].metric) {
        throw ParetoError(ParetoError::Kind::BadObjective,
                          "metric '" + std::string(to_string(objectives[i].metric)) + "' repeated");
      }
    }
  }
  for (const VariantPoint& p : points) {
    for (Metric m : {Metric::Accuracy, Metric::Speed, Metric::Memory}) {
      const double v = metric_value(p, m);
      if (!std::isfinite(v) || v < 0.0) {
        throw ParetoError(ParetoError::Kind::InvalidPoint,
                          "variant '" + p.name + "' has invalid " + std::string(to_string(m)));
      }
    }
  }
}

}  // namespace

bool dominates(const VariantPoint& p, const VariantPoint& q, const std::vector<Objective>& objectives) {
  bool strict = false;
  for (const Objective& o : objectives) {
    const double a = score(p, o), b = score(q, o);
    if (a < b) return false;
    if (a > b) strict = true;
  }
  return strict;
}

FrontierResult compute_frontier(const std::vector<VariantPoint>& points,
                                const std::vector<Objective>& objectives) {
  validate(points, objectives);
  const std::size_t n = points.size();
  const std::size_t k = objectives.size();
  std::vector<double> s(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) s[i * k + j] = score(points[i], objectives[j]);
  }

  // Lexicographically best-first: nothing later in this order can dominate
  // anything earlier, so each point only has to be checked against the
  // frontier found so far.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t j = 0; j < k; ++j) {
      if (s[a * k + j] != s[b * k + j]) return s[a * k + j] > s[b * k + j];
    }
    return a < b;
  });
  auto dom = [&](std::size_t p, std::size_t q) {
    bool strict = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (s[p * k + j] < s[q * k + j]) return false;
      if (s[p * k + j] > s[q * k + j]) strict = true;
    }
    return strict;
  };

  FrontierResult r;
  r.points = points;
  r.objectives = objectives;
  r.on_frontier.assign(n, false);
  r.dominated_by.assign(n, std::nullopt);
  std::vector<std::size_t> frontier;
  std::vector<std::size_t> dominated;
  for (std::size_t idx : order) {
    const bool beaten = std::any_of(frontier.begin(), frontier.end(), [&](std::size_t f) { return dom(f, idx); });
    if (beaten) {
      dominated.push_back(idx);
    } else {
      frontier.push_back(idx);
      r.on_frontier[idx] = true;
    }
  }

  std::vector<double> range(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, s[i * k + j]);
      hi = std::max(hi, s[i * k + j]);
    }
    range[j] = hi - lo;
  }
  std::sort(frontier.begin(), frontier.end());
  for (std::size_t q : dominated) {
    std::optional<std::size_t> best;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t f : frontier) {
      if (!dom(f, q)) continue;
      double margin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        margin = std::min(margin, range[j] > 0.0 ? (s[f * k + j] - s[q * k + j]) / range[j] : 0.0);
      }
      if (margin > best_margin) {
        best_margin = margin;
        best = f;
      }
    }
    r.dominated_by[q] = best;
  }
  return r;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "text" || s == "table") return ReportFormat::Text;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw ParetoError(ParetoError::Kind::UnsupportedFormat, "unsupported report format '" + std::string(s) + "'");
}

Recommendations recommend(const FrontierResult& r) {
  Recommendations rec;
  auto pick = [&](Metric primary, Metric secondary) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      if (!r.on_frontier[i]) continue;
      if (!best) {
        best = i;
        continue;
      }
      const VariantPoint& a = r.points[i];
      const VariantPoint& b = r.points[*best];
      const double pa = metric_value(a, primary), pb = metric_value(b, primary);
      if (pa > pb || (pa == pb && metric_value(a, secondary) > metric_value(b, secondary))) best = i;
    }
    return best;
  };
  rec.best_accuracy = pick(Metric::Accuracy, Metric::Speed);
  rec.best_speed = pick(Metric::Speed, Metric::Accuracy);
  return rec;
}

namespace {

// Frontier first, then accuracy, speed, memory, input order.
std::vector<std::size_t> ranking(const FrontierResult& r) {
  std::vector<std::size_t> idx(r.points.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const VariantPoint& pa = r.points[a];
    const VariantPoint& pb = r.points[b];
    if (r.on_frontier[a] != r.on_frontier[b]) return static_cast<bool>(r.on_frontier[a]);
    if (pa.accuracy != pb.accuracy) return pa.accuracy > pb.accuracy;
    if (pa.speed_tps != pb.speed_tps) return pa.speed_tps > pb.speed_tps;
    return pa.memory_bytes < pb.memory_bytes;
  });
  return idx;
}

std::string witness_name(const FrontierResult& r, std::size_t i) {
  return r.dominated_by[i] ? r.points[*r.dominated_by[i]].name : std::string();
}

std::string objectives_label(const FrontierResult& r) {
  std::string s;
  for (const Objective& o : r.objectives) {
    if (!s.empty()) s += ", ";
    s += std::string(to_string(o.metric)) + (o.direction == Direction::Maximize ? " (max)" : " (min)");
  }
  return s;
}

}  // namespace

std::string frontier_csv(const FrontierResult& r) {
  std::string out = csv::join({"name", "accuracy", "speed_tps", "memory_bytes", "on_frontier", "dominated_by"});
  out.push_back('\n');
  for (std::size_t i : ranking(r)) {
    const VariantPoint& p = r.points[i];
    out += csv::join({p.name, format_double(p.accuracy), format_double(p.speed_tps), format_double(p.memory_bytes),
                      r.on_frontier[i] ? "true" : "false", witness_name(r, i)});
    out.push_back('\n');
  }
  return out;
}

std::string emit_tradeoff_report(const FrontierResult& r, ReportFormat format) {
  const Recommendations rec = recommend(r);
  if (format == ReportFormat::Csv) return frontier_csv(r);
  if (format == ReportFormat::Json) {
    json rows = json::array();
    int rank = 0;
    for (std::size_t i : ranking(r)) {
      const VariantPoint& p = r.points[i];
      rows.push_back({{"rank", ++rank},
                      {"name", p.name},
                      {"accuracy", p.accuracy},
                      {"speed_tps", p.speed_tps},
                      {"memory_bytes", p.memory_bytes},
                      {"on_frontier", static_cast<bool>(r.on_frontier[i])},
                      {"dominated_by", r.dominated_by[i] ? json(witness_name(r, i)) : json(nullptr)}});
    }
    json frontier = json::array();
    for (std::size_t i : ranking(r)) {
      if (r.on_frontier[i]) frontier.push_back(r.points[i].name);
    }
    json objectives = json::array();
    for (const Objective& o : r.objectives) {
      objectives.push_back({{"metric", to_string(o.metric)},
                            {"direction", o.direction == Direction::Maximize ? "maximize" : "minimize"}});
    }
    auto name_of = [&](const std::optional<std::size_t>& i) { return i ? json(r.points[*i].name) : json(nullptr); };
    return json{{"objectives", objectives},
                {"frontier", frontier},
                {"variants", rows},
                {"recommendations",
                 {{"highest_accuracy", name_of(rec.best_accuracy)}, {"highest_speed", name_of(rec.best_speed)}}}}
               .dump(2);
  }

  std::string out = "objectives: " + objectives_label(r) + "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%4s  %-20s %9s %10s %12s  %-8s %s\n", "rank", "variant", "accuracy", "tok/s",
                "memory GiB", "frontier", "dominated by");
  out += line;
  int rank = 0;
  for (std::size_t i : ranking(r)) {
    const VariantPoint& p = r.points[i];
    std::snprintf(line, sizeof line, "%4d  %-20s %9.3f %10.2f %12.2f  %-8s %s\n", ++rank, p.name.c_str(),
                  p.accuracy, p.speed_tps, p.memory_bytes / (1024.0 * 1024.0 * 1024.0),
                  r.on_frontier[i] ? "yes" : "no", witness_name(r, i).c_str());
    out += line;
  }
  out += "\n";
  if (rec.best_accuracy) out += "recommended for accuracy: " + r.points[*rec.best_accuracy].name + "\n";
  if (rec.best_speed) out += "recommended for speed:    " + r.points[*rec.best_speed].name + "\n";
  return out;
}

namespace {

double parse_number(const std::string& field, const std::string& column, std::size_t row) {
  const std::string t = text::trim(field);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ParetoError(ParetoError::Kind::ParseError,
                      "row " + std::to_string(row) + ": '" + field + "' is not a number in column " + column);
  }
  return v;
}

void check_point(const VariantPoint& p) {
  for (Metric m : {Metric::Accuracy, Metric::Speed, Metric::Memory}) {
    const double v = metric_value(p, m);
    if (!std::isfinite(v) || v < 0.0) {
      throw ParetoError(ParetoError::Kind::InvalidPoint, "variant '" + p.name + "' has invalid " + std::string(to_string(m)));
    }
  }
}

}  // namespace

std::vector<VariantPoint> parse_points_csv(std::string_view document) {
  const auto rows = csv::parse(document);
  if (rows.empty()) throw ParetoError(ParetoError::Kind::ParseError, "missing CSV header");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[text::trim(rows[0][i])] = i;
  for (const char* c : {"name", "accuracy", "speed_tps", "memory_bytes"}) {
    if (!col.count(c)) throw ParetoError(ParetoError::Kind::ParseError, std::string("missing column '") + c + "'");
  }
  std::vector<VariantPoint> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && text::trim(row[0]).empty()) continue;
    if (row.size() < rows[0].size()) {
      throw ParetoError(ParetoError::Kind::ParseError, "row " + std::to_string(r) + " has too few fields");
    }
    VariantPoint p;
    p.name = row[col["name"]];
    p.accuracy = parse_number(row[col["accuracy"]], "accuracy", r);
    p.speed_tps = parse_number(row[col["speed_tps"]], "speed_tps", r);
    p.memory_bytes = parse_number(row[col["memory_bytes"]], "memory_bytes", r);
    check_point(p);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<VariantPoint> parse_points_json(std::string_view document) {
  const json j = json::parse(document, nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw ParetoError(ParetoError::Kind::ParseError, "expected a JSON array of variants");
  }
  std::vector<VariantPoint> out;
  try {
    for (const json& item : j) {
      VariantPoint p{item.at("name").get<std::string>(), item.at("accuracy").get<double>(),
                     item.at("speed_tps").get<double>(), item.at("memory_bytes").get<double>()};
      check_point(p);
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ParetoError(ParetoError::Kind::ParseError, std::string("variant list: ") + e.what());
  }
  return out;
}

}  // namespace intentkit
