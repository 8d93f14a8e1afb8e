#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "intentkit/profiler.hpp"
#include "test_support.hpp"

namespace intentkit {
namespace {

using namespace std::chrono_literals;

ProfilerError::Kind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ProfilerError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ProfilerError thrown";
  return ProfilerError::Kind::InvalidConfig;
}

// ---------------------------------------------------------------- energy

TEST(Energy, ConstantPower) {
  const std::vector<PowerSample> t = {{0.0, 70.0}, {0.5, 70.0}, {2.0, 70.0}, {10.0, 70.0}};
  EXPECT_NEAR(integrate_power(t), 700.0, 700.0 * 1e-9);
}

TEST(Energy, LinearRampIsExact) {
  // P(t) = 10 + 3t on [0, 8]: integral 10*8 + 1.5*64 = 176.
  std::vector<PowerSample> t;
  for (double s = 0.0; s <= 8.0; s += 0.25) t.push_back({s, 10.0 + 3.0 * s});
  EXPECT_NEAR(integrate_power(t), 176.0, 176.0 * 1e-9);
}

TEST(Energy, Errors) {
  const std::vector<PowerSample> one = {{0.0, 1.0}};
  EXPECT_EQ(kind_of([&] { integrate_power(one); }), ProfilerError::Kind::InsufficientSamples);
  const std::vector<PowerSample> back = {{0.0, 1.0}, {2.0, 1.0}, {1.0, 1.0}};
  EXPECT_EQ(kind_of([&] { integrate_power(back); }), ProfilerError::Kind::NonMonotonicTimestamps);
}

TEST(EnergyProperty, PartitionAdditivity) {
  Rng rng(606);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.below(200);
    std::vector<PowerSample> t;
    double s = rng.uniform01() * 100.0;
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back({s, 300.0 * rng.uniform01()});
      s += 1e-3 + rng.uniform01();
    }
    const std::size_t cut = 1 + rng.below(n - 2);  // both halves keep >= 2 samples
    const std::span<const PowerSample> all(t);
    const double whole = integrate_power(all);
    const double parts = integrate_power(all.first(cut + 1)) + integrate_power(all.subspan(cut));
    EXPECT_NEAR(parts, whole, std::abs(whole) * 1e-12 + 1e-12);

    // Piecewise-linear power: integral by summing exact segment areas.
    double exact = 0.0;
    for (std::size_t i = 1; i < n; ++i) exact += (t[i].t_s - t[i - 1].t_s) * (t[i].watts + t[i - 1].watts) / 2.0;
    EXPECT_NEAR(whole, exact, std::abs(exact) * 1e-9);
  }
}

TEST(Probe, ParsesSummedLines) {
  auto r = parse_probe_output("70.5, 1024\n20.25, 512\n");
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->watts, 90.75);
  EXPECT_EQ(r->memory_bytes, 1536LL * 1024 * 1024);
  r = parse_probe_output("42\n");
  ASSERT_TRUE(r);
  EXPECT_FALSE(r->memory_bytes);
  EXPECT_FALSE(parse_probe_output("N/A\n"));
  EXPECT_FALSE(parse_probe_output(""));
}

TEST(Memory, OwnProcessTreeHasResidentPages) {
  EXPECT_GT(process_tree_rss(::getpid()), 1 << 20);
}

// ---------------------------------------------------------------- comparisons

PerfReport variant(std::string name, double tps) {
  PerfReport r = make_perf_report(std::move(name), static_cast<std::int64_t>(std::llround(tps * 100)), 100.0);
  return r;
}

TEST(Comparison, MemoryReduction) {
  PerfReport a = variant("fp16", 10), b = variant("gptq", 10);
  a.peak_memory_bytes = 3'270'000'000;
  b.peak_memory_bytes = 1'930'000'000;
  const auto row = derive_comparison(a, b, {ComparisonField::Memory});
  EXPECT_EQ(format_fixed(*row.memory_reduction_pct, 1), "41.0");
}

TEST(Comparison, GpuSlowdownAndLoadTime) {
  PerfReport a = variant("fp16", 44.56), b = variant("gptq", 7.92);
  a.load_time_s = 16.95;
  b.load_time_s = 1.12;
  const auto row = derive_comparison(a, b, {ComparisonField::Throughput, ComparisonField::LoadTime});
  EXPECT_EQ(format_fixed(*row.slowdown_pct, 1), "82.2");
  EXPECT_EQ(format_fixed(*row.load_time_reduction_pct, 1), "93.4");
}

TEST(Comparison, CpuSpeedup) {
  const auto row = derive_comparison(variant("FP16", 2.6), variant("Q4_K_M", 47.9), {ComparisonField::Throughput});
  EXPECT_EQ(format_fixed(*row.speedup_x, 1), "18.4");
  EXPECT_NE(format_comparison(row).find("speedup 18.4x"), std::string::npos);
}

// Constructed energy fixture: 70 W at 44.56 tok/s against 73.3 W at 7.92 tok/s.
TEST(Comparison, EnergyPerToken) {
  const PerfReport a = make_perf_report("fp16", 4456, 100.0, 7000.0);
  const PerfReport b = make_perf_report("gptq", 792, 100.0, 7330.0);
  const auto row = derive_comparison(a, b, {ComparisonField::EnergyPerToken});
  EXPECT_NEAR(*row.energy_per_token_increase_pct, 489.3, 0.2);
  EXPECT_NE(format_comparison(row).find("energy/token +489."), std::string::npos) << format_comparison(row);
}

TEST(Comparison, SelfComparisonIsNeutral) {
  PerfReport a = make_perf_report("x", 500, 10.0, 900.0);
  a.peak_memory_bytes = 1 << 30;
  a.load_time_s = 2.0;
  const auto row = derive_comparison(a, a);
  EXPECT_EQ(*row.memory_reduction_pct, 0.0);
  EXPECT_EQ(*row.slowdown_pct, 0.0);
  EXPECT_EQ(*row.speedup_x, 1.0);
  EXPECT_EQ(*row.energy_per_token_increase_pct, 0.0);
  EXPECT_EQ(*row.load_time_reduction_pct, 0.0);
}

TEST(Comparison, MissingField) {
  const PerfReport a = variant("a", 10), b = variant("b", 20);
  EXPECT_EQ(kind_of([&] { derive_comparison(a, b); }), ProfilerError::Kind::MissingField);
  EXPECT_EQ(common_fields(a, b), std::vector<ComparisonField>{ComparisonField::Throughput});
  EXPECT_NO_THROW(derive_comparison(a, b, common_fields(a, b)));
}

TEST(PerfReportJson, RoundTrip) {
  PerfReport r = make_perf_report("Q4_K_M", 1234, 25.75, 812.5);
  r.peak_memory_bytes = 1'234'803'098;
  r.load_time_s = 1.5;
  r.per_run_throughputs = {47.0, 48.8};
  r.run_count = 2;
  r.timing_convention = "wall clock";
  EXPECT_EQ(perf_report_from_json(to_json(r)), r);
}

TEST(Throughput, ZeroElapsedIsClamped) {
  EXPECT_TRUE(std::isfinite(tokens_per_second(10, 0.0)));
  EXPECT_EQ(tokens_per_second(0, 0.0), 0.0);
}

// ---------------------------------------------------------------- live runs

BackendConfig shell(std::string cmd) {
  BackendConfig c;
  c.kind = BackendKind::Subprocess;
  c.command_template = std::move(cmd);
  c.timeout = 5s;
  c.retries = 0;
  return c;
}

TEST(Load, MatchesServerStartupDelay) {
  testing::TempDir dir;
  const std::string flag = shell_quote((dir / "ready").string());
  const auto started = std::chrono::steady_clock::now();
  BackgroundProcess server("sleep 1.12; touch " + flag + "; sleep 30");
  LoadProbe probe;
  probe.poll_interval = 5ms;
  probe.timeout = 10s;
  const double t = measure_load(shell("test -e " + flag + " && echo ok # {prompt}"), probe, started);
  EXPECT_NEAR(t, 1.12, 0.05);
}

TEST(Load, NeverReadyTimesOut) {
  LoadProbe probe;
  probe.timeout = 300ms;
  probe.poll_interval = 20ms;
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(kind_of([&] { measure_load(shell("exit 1 # {prompt}"), probe); }), ProfilerError::Kind::Timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 2s);
}

TEST(Bench, SubprocessWithPowerProbe) {
  BenchConfig cfg;
  cfg.variant_name = "stub";
  cfg.warmup = 1;
  cfg.runs = 3;
  cfg.sampler.interval = 20ms;
  cfg.sampler.power_command = "echo 50,100";
  const auto r = run_generation_benchmark(shell("sleep 0.1; echo one two three four # {prompt}"), {"a", "b"}, cfg);
  EXPECT_EQ(r.tokens_generated, 3 * 2 * 4);
  EXPECT_FALSE(r.token_count_exact);
  EXPECT_EQ(r.run_count, 3);
  ASSERT_EQ(r.per_run_throughputs.size(), 3u);
  EXPECT_NEAR(r.tokens_per_second, r.tokens_generated / r.elapsed_s, 1e-9);
  EXPECT_GT(r.elapsed_s, 0.55);
  ASSERT_TRUE(r.peak_memory_bytes);
  EXPECT_GT(*r.peak_memory_bytes, 0);
  EXPECT_EQ(r.peak_probe_memory_bytes, 100LL << 20);
  ASSERT_TRUE(r.energy_j);
  // 50 W over the sampled window, which spans the whole measured section.
  EXPECT_GT(*r.energy_j, 50.0 * r.elapsed_s * 0.9);
  EXPECT_NEAR(*r.energy_per_token, *r.energy_j / r.tokens_generated, 1e-12);
}

TEST(Bench, OracleHasNoMemoryOrEnergy) {
  BackendConfig c;
  c.kind = BackendKind::Oracle;
  c.oracle = std::make_shared<const OracleParser>(load_catalog(testing::data_dir() / "catalog.json"),
                                                  load_lexicons(testing::data_dir() / "lexicons.json"));
  BenchConfig cfg;
  cfg.runs = 2;
  const auto r = run_generation_benchmark(c, {"add 2 beers"}, cfg);
  EXPECT_FALSE(r.peak_memory_bytes);
  EXPECT_FALSE(r.energy_j);
  EXPECT_GT(r.tokens_generated, 0);
}

TEST(Bench, InvalidConfig) {
  BenchConfig cfg;
  cfg.runs = 0;
  EXPECT_EQ(kind_of([&] { run_generation_benchmark(shell("echo {prompt}"), {"x"}, cfg); }),
            ProfilerError::Kind::InvalidConfig);
  cfg.runs = 1;
  EXPECT_EQ(kind_of([&] { run_generation_benchmark(shell("echo {prompt}"), {}, cfg); }),
            ProfilerError::Kind::InvalidConfig);
}

TEST(Csv, HeaderMatchesRow) {
  PerfReport r = make_perf_report("v", 10, 1.0);
  EXPECT_EQ(csv::parse(perf_csv_header() + "\n" + perf_csv_row(r) + "\n")[0].size(),
            csv::parse(perf_csv_row(r) + "\n")[0].size());
}

}  // namespace
}  // namespace intentkit
