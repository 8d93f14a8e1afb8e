#pragma once

// Load time, throughput, peak memory and energy for one model variant, and
// the relative deltas between two variants.

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentkit/backends.hpp"

namespace intentkit {

class ProfilerError : public std::runtime_error {
 public:
  enum class Kind { InsufficientSamples, NonMonotonicTimestamps, MissingField, Timeout, InvalidConfig };

  ProfilerError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct PowerSample {
  double t_s = 0.0;    // monotonic seconds
  double watts = 0.0;
};

// Trapezoid rule. Throws InsufficientSamples (< 2) or NonMonotonicTimestamps.
double integrate_power(std::span<const PowerSample> trace);

// Parses one probe reading: lines of "watts[,mebibytes]", summed over lines
// (one line per GPU). Returns nullopt on malformed output.
struct ProbeReading {
  double watts = 0.0;
  std::optional<std::int64_t> memory_bytes;
};
std::optional<ProbeReading> parse_probe_output(std::string_view text);

// Resident set size of `root` plus all of its descendants, from /proc.
std::int64_t process_tree_rss(pid_t root);

struct SamplerConfig {
  std::chrono::milliseconds interval{100};
  std::string power_command;                  // empty: no probe
  std::chrono::milliseconds probe_timeout{2000};
  std::optional<std::filesystem::path> rapl_energy_file;  // e.g. .../intel-rapl:0/energy_uj
};

struct SamplerResult {
  std::vector<PowerSample> power_trace;
  std::size_t probe_failures = 0;
  std::optional<std::int64_t> peak_rss_bytes;     // process-tree RSS, max fold
  std::optional<std::int64_t> peak_probe_memory;  // VRAM from the probe
  std::optional<double> rapl_energy_j;
  std::vector<std::int64_t> rss_samples;
};

// Background sampler: memory of watched processes and the power probe at a
// fixed cadence. start() takes an immediate sample, stop() joins the thread
// and takes a final one so that short windows still yield two power samples.
class Sampler {
 public:
  explicit Sampler(SamplerConfig config);
  Sampler(const Sampler&) = delete;
  Sampler& operator=(const Sampler&) = delete;
  ~Sampler();

  void start();
  SamplerResult stop();

  void watch(pid_t pid);
  // Folds the exit-time peak (wait4 ru_maxrss) into the result.
  void unwatch(pid_t pid, std::int64_t peak_rss_bytes);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct LoadProbe {
  std::string prompt = "add 1 apple";
  std::chrono::milliseconds timeout{120'000};
  std::chrono::milliseconds poll_interval{50};
};

// Seconds from `started_at` (default: now) until the first probe completion
// succeeds. Throws ProfilerError{Timeout}.
double measure_load(const BackendConfig& backend, const LoadProbe& probe,
                    std::optional<std::chrono::steady_clock::time_point> started_at = std::nullopt);

struct BenchConfig {
  std::string variant_name = "variant";
  int warmup = 1;
  int runs = 3;
  SamplerConfig sampler;
  std::optional<pid_t> memory_pid;  // extra process to sample, e.g. a server
};

struct PerfReport {
  std::string variant_name;
  std::optional<double> load_time_s;
  std::int64_t tokens_generated = 0;
  double elapsed_s = 0.0;
  double tokens_per_second = 0.0;  // tokens_generated / elapsed_s
  double median_tokens_per_second = 0.0;
  double mean_tokens_per_second = 0.0;
  std::optional<std::int64_t> peak_memory_bytes;
  std::optional<std::int64_t> peak_probe_memory_bytes;
  std::optional<double> energy_j;
  std::optional<double> energy_per_token;
  bool token_count_exact = false;
  int run_count = 0;
  std::vector<double> per_run_throughputs;
  std::string timing_convention;
  friend bool operator==(const PerfReport&, const PerfReport&) = default;
};

// Smallest elapsed time used as a divisor.
inline constexpr double kMinElapsedSeconds = 1e-9;

// Throughput with the zero-elapsed clamp applied.
double tokens_per_second(std::int64_t tokens, double elapsed_s);

// Fills the derived fields (tokens_per_second, energy_per_token).
PerfReport make_perf_report(std::string variant, std::int64_t tokens, double elapsed_s,
                            std::optional<double> energy_j = std::nullopt);

// Throws BackendError from the first failing call; nothing partial is returned.
PerfReport run_generation_benchmark(const BackendConfig& backend,
                                    const std::vector<std::string>& prompts,
                                    const BenchConfig& config);

enum class ComparisonField { Memory, Throughput, EnergyPerToken, LoadTime };

struct ComparisonRow {
  std::string baseline;
  std::string candidate;
  std::optional<double> memory_reduction_pct;
  std::optional<double> slowdown_pct;
  std::optional<double> speedup_x;
  std::optional<double> energy_per_token_increase_pct;
  std::optional<double> load_time_reduction_pct;
};

// Deltas of `b` relative to baseline `a`. Every requested field must be
// present (and non-zero in `a`) in both reports, else MissingField.
ComparisonRow derive_comparison(const PerfReport& a, const PerfReport& b,
                                const std::vector<ComparisonField>& fields = {
                                    ComparisonField::Memory, ComparisonField::Throughput,
                                    ComparisonField::EnergyPerToken, ComparisonField::LoadTime});

// Fields present in both reports.
std::vector<ComparisonField> common_fields(const PerfReport& a, const PerfReport& b);

// One decimal: "41.0%", "18.4x".
std::string format_comparison(const ComparisonRow& row);
nlohmann::json to_json(const ComparisonRow& row);

nlohmann::json to_json(const PerfReport& r);
PerfReport perf_report_from_json(const nlohmann::json& j);
// Columns: variant, load_s, tok_s, peak_mem_bytes, energy_j, j_per_token, exact_tokens.
std::string perf_csv_header();
std::string perf_csv_row(const PerfReport& r);

}  // namespace intentkit
