#include "intentkit/profiler.hpp"

#include <dirent.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "intentkit/io.hpp"
#include "intentkit/subprocess.hpp"
#include "intentkit/text.hpp"

namespace intentkit {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double integrate_power(std::span<const PowerSample> trace) {
  if (trace.size() < 2) {
    throw ProfilerError(ProfilerError::Kind::InsufficientSamples,
                        "power trace needs at least 2 samples, got " + std::to_string(trace.size()));
  }
  double joules = 0.0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double dt = trace[i].t_s - trace[i - 1].t_s;
    if (!(dt > 0.0)) {
      throw ProfilerError(ProfilerError::Kind::NonMonotonicTimestamps,
                          "timestamps must be strictly increasing (sample " + std::to_string(i) + ")");
    }
    joules += 0.5 * (trace[i].watts + trace[i - 1].watts) * dt;
  }
  return joules;
}

std::optional<ProbeReading> parse_probe_output(std::string_view text) {
  ProbeReading out;
  bool any = false;
  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    line = text::trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    auto parse_num = [](const std::string& s) -> std::optional<double> {
      const std::string t = text::trim(s);
      if (t.empty()) return std::nullopt;
      char* end = nullptr;
      const double v = std::strtod(t.c_str(), &end);
      if (end != t.c_str() + t.size() || !std::isfinite(v) || v < 0) return std::nullopt;
      return v;
    };
    const auto watts = parse_num(line.substr(0, comma));
    if (!watts) return std::nullopt;
    out.watts += *watts;
    if (comma != std::string::npos) {
      const auto mib = parse_num(line.substr(comma + 1));
      if (!mib) return std::nullopt;
      out.memory_bytes = out.memory_bytes.value_or(0) + static_cast<std::int64_t>(*mib * 1024.0 * 1024.0);
    }
    any = true;
  }
  if (!any) return std::nullopt;
  return out;
}

namespace {

struct ProcStat {
  pid_t ppid = 0;
  std::int64_t rss_pages = 0;
};

std::optional<ProcStat> read_proc_stat(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/stat");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto close = content.rfind(')');
  if (close == std::string::npos) return std::nullopt;
  std::istringstream fields(content.substr(close + 1));
  std::vector<std::string> f;
  for (std::string tok; fields >> tok;) f.push_back(tok);
  // f[0] is field 3 (state); ppid is field 4, rss field 24.
  if (f.size() < 22) return std::nullopt;
  return ProcStat{static_cast<pid_t>(std::strtol(f[1].c_str(), nullptr, 10)),
                  std::strtoll(f[21].c_str(), nullptr, 10)};
}

}  // namespace

std::int64_t process_tree_rss(pid_t root) {
  std::map<pid_t, std::vector<pid_t>> children;
  std::map<pid_t, std::int64_t> rss;
  if (DIR* d = ::opendir("/proc")) {
    while (const dirent* e = ::readdir(d)) {
      char* end = nullptr;
      const long pid = std::strtol(e->d_name, &end, 10);
      if (*end != '\0' || pid <= 0) continue;
      if (const auto st = read_proc_stat(static_cast<pid_t>(pid))) {
        children[st->ppid].push_back(static_cast<pid_t>(pid));
        rss[static_cast<pid_t>(pid)] = st->rss_pages;
      }
    }
    ::closedir(d);
  }
  const std::int64_t page = ::sysconf(_SC_PAGESIZE);
  std::int64_t total = 0;
  std::set<pid_t> seen;
  std::vector<pid_t> stack{root};
  while (!stack.empty()) {
    const pid_t p = stack.back();
    stack.pop_back();
    if (!seen.insert(p).second) continue;
    if (const auto it = rss.find(p); it != rss.end()) total += it->second * page;
    if (const auto it = children.find(p); it != children.end()) {
      stack.insert(stack.end(), it->second.begin(), it->second.end());
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Sampler

namespace {

std::optional<std::uint64_t> read_counter(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::uint64_t v = 0;
  if (!(in >> v)) return std::nullopt;
  return v;
}

}  // namespace

struct Sampler::State {
  SamplerConfig config;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  bool running = false;
  std::thread thread;
  std::set<pid_t> watched;
  SamplerResult result;
  Clock::time_point t0;
  std::optional<std::uint64_t> rapl_start;

  void fold_rss(std::int64_t v) {
    result.rss_samples.push_back(v);
    result.peak_rss_bytes = std::max(result.peak_rss_bytes.value_or(0), v);
  }

  void sample_once() {
    std::vector<pid_t> pids;
    {
      std::lock_guard lock(mu);
      pids.assign(watched.begin(), watched.end());
    }
    std::int64_t rss = 0;
    for (pid_t p : pids) rss += process_tree_rss(p);
    std::optional<ProbeReading> reading;
    if (!config.power_command.empty()) {
      try {
        const ProcessResult pr = run_shell(config.power_command, config.probe_timeout);
        if (pr.exit_code == 0) reading = parse_probe_output(pr.out);
      } catch (const BackendError&) {
      }
    }
    const double t = std::chrono::duration<double>(Clock::now() - t0).count();
    std::lock_guard lock(mu);
    if (!pids.empty()) fold_rss(rss);
    if (config.power_command.empty()) return;
    if (!reading) {
      ++result.probe_failures;
      return;
    }
    if (!result.power_trace.empty() && !(t > result.power_trace.back().t_s)) return;
    result.power_trace.push_back({t, reading->watts});
    if (reading->memory_bytes) {
      result.peak_probe_memory = std::max(result.peak_probe_memory.value_or(0), *reading->memory_bytes);
    }
  }

  void loop() {
    std::unique_lock lock(mu);
    while (!stopping) {
      if (cv.wait_for(lock, config.interval, [&] { return stopping; })) break;
      lock.unlock();
      sample_once();
      lock.lock();
    }
  }
};

Sampler::Sampler(SamplerConfig config) : state_(std::make_unique<State>()) {
  if (config.interval.count() <= 0) {
    throw ProfilerError(ProfilerError::Kind::InvalidConfig, "sampler interval must be positive");
  }
  state_->config = std::move(config);
}

Sampler::~Sampler() {
  if (state_ && state_->running) stop();
}

void Sampler::start() {
  State& s = *state_;
  if (s.running) return;
  s.result = {};
  s.stopping = false;
  s.t0 = Clock::now();
  if (s.config.rapl_energy_file) s.rapl_start = read_counter(*s.config.rapl_energy_file);
  s.sample_once();
  s.running = true;
  s.thread = std::thread([&s] { s.loop(); });
}

SamplerResult Sampler::stop() {
  State& s = *state_;
  if (!s.running) return s.result;
  {
    std::lock_guard lock(s.mu);
    s.stopping = true;
  }
  s.cv.notify_all();
  s.thread.join();
  s.running = false;
  s.sample_once();
  if (s.config.rapl_energy_file && s.rapl_start) {
    if (const auto end = read_counter(*s.config.rapl_energy_file)) {
      std::uint64_t delta = *end - *s.rapl_start;
      if (*end < *s.rapl_start) {
        const auto range = read_counter(s.config.rapl_energy_file->parent_path() / "max_energy_range_uj");
        delta = range ? *range - *s.rapl_start + *end : 0;
      }
      s.result.rapl_energy_j = static_cast<double>(delta) * 1e-6;
    }
  }
  return s.result;
}

void Sampler::watch(pid_t pid) {
  std::lock_guard lock(state_->mu);
  state_->watched.insert(pid);
}

void Sampler::unwatch(pid_t pid, std::int64_t peak_rss_bytes) {
  std::lock_guard lock(state_->mu);
  state_->watched.erase(pid);
  if (peak_rss_bytes > 0) {
    state_->result.peak_rss_bytes = std::max(state_->result.peak_rss_bytes.value_or(0), peak_rss_bytes);
  }
}

// ---------------------------------------------------------------------------
// Load time and throughput

double measure_load(const BackendConfig& backend, const LoadProbe& probe,
                    std::optional<Clock::time_point> started_at) {
  const auto start = started_at.value_or(Clock::now());
  const auto deadline = start + probe.timeout;
  std::string last_error = "no attempt made";
  for (;;) {
    const auto now = Clock::now();
    if (now >= deadline) break;
    BackendConfig attempt = backend;
    attempt.retries = 0;
    attempt.timeout = std::min(backend.timeout,
                               std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now) +
                                   std::chrono::milliseconds(1));
    try {
      complete_once(attempt, probe.prompt);
      return std::chrono::duration<double>(Clock::now() - start).count();
    } catch (const BackendError& e) {
      if (e.kind() == BackendError::Kind::InvalidConfig) throw;
      last_error = e.what();
    }
    std::this_thread::sleep_for(std::min<Clock::duration>(probe.poll_interval, deadline - Clock::now()));
  }
  throw ProfilerError(ProfilerError::Kind::Timeout,
                      "backend not ready after " + std::to_string(probe.timeout.count()) +
                          " ms (last error: " + last_error + ")");
}

double tokens_per_second(std::int64_t tokens, double elapsed_s) {
  return static_cast<double>(tokens) / std::max(elapsed_s, kMinElapsedSeconds);
}

PerfReport make_perf_report(std::string variant, std::int64_t tokens, double elapsed_s,
                            std::optional<double> energy_j) {
  PerfReport r;
  r.variant_name = std::move(variant);
  r.tokens_generated = tokens;
  r.elapsed_s = std::max(elapsed_s, kMinElapsedSeconds);
  r.tokens_per_second = tokens_per_second(tokens, elapsed_s);
  r.mean_tokens_per_second = r.median_tokens_per_second = r.tokens_per_second;
  r.per_run_throughputs = {r.tokens_per_second};
  r.run_count = 1;
  r.energy_j = energy_j;
  if (energy_j && tokens > 0) r.energy_per_token = *energy_j / static_cast<double>(tokens);
  return r;
}

PerfReport run_generation_benchmark(const BackendConfig& backend,
                                    const std::vector<std::string>& prompts,
                                    const BenchConfig& config) {
  if (config.runs < 1 || config.warmup < 0) {
    throw ProfilerError(ProfilerError::Kind::InvalidConfig, "runs must be >= 1 and warmup >= 0");
  }
  if (prompts.empty()) throw ProfilerError(ProfilerError::Kind::InvalidConfig, "no prompts given");
  validate_config(backend);

  for (int w = 0; w < config.warmup; ++w) {
    for (const auto& p : prompts) complete(backend, p);
  }

  Sampler sampler(config.sampler);
  ProcessObserver hooks;
  hooks.on_spawn = [&](pid_t pid) { sampler.watch(pid); };
  hooks.on_exit = [&](pid_t pid, std::int64_t peak) { sampler.unwatch(pid, peak); };
  if (config.memory_pid) sampler.watch(*config.memory_pid);

  PerfReport r;
  r.variant_name = config.variant_name;
  r.token_count_exact = true;
  bool all_server_timed = true;
  double total_elapsed = 0.0;
  sampler.start();
  for (int run = 0; run < config.runs; ++run) {
    std::int64_t tokens = 0;
    double elapsed = 0.0;
    for (const auto& p : prompts) {
      const CompletionResult c = complete(backend, p, &hooks);
      if (c.completion_tokens && c.token_count_exact) {
        tokens += *c.completion_tokens;
      } else {
        tokens += count_tokens_fallback(c.text);
        r.token_count_exact = false;
      }
      if (c.server_generation_time) {
        elapsed += std::chrono::duration<double>(*c.server_generation_time).count();
      } else {
        all_server_timed = false;
        elapsed += std::chrono::duration<double>(c.total_latency).count();
      }
    }
    r.tokens_generated += tokens;
    total_elapsed += elapsed;
    r.per_run_throughputs.push_back(tokens_per_second(tokens, elapsed));
  }
  const SamplerResult samples = sampler.stop();

  r.run_count = config.runs;
  r.elapsed_s = std::max(total_elapsed, kMinElapsedSeconds);
  r.tokens_per_second = tokens_per_second(r.tokens_generated, total_elapsed);
  std::vector<double> sorted = r.per_run_throughputs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  r.median_tokens_per_second = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  double sum = 0.0;
  for (double v : sorted) sum += v;
  r.mean_tokens_per_second = sum / static_cast<double>(m);
  r.timing_convention = all_server_timed ? "server-reported decode time"
                                         : "wall clock per completion call, prompt processing included";

  if (backend.kind == BackendKind::Subprocess || config.memory_pid) {
    r.peak_memory_bytes = samples.peak_rss_bytes;
  }
  r.peak_probe_memory_bytes = samples.peak_probe_memory;
  if (!config.sampler.power_command.empty() && samples.power_trace.size() >= 2) {
    r.energy_j = integrate_power(samples.power_trace);
  } else if (samples.rapl_energy_j) {
    r.energy_j = samples.rapl_energy_j;
  }
  if (r.energy_j && r.tokens_generated > 0) {
    r.energy_per_token = *r.energy_j / static_cast<double>(r.tokens_generated);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

std::string_view field_name(ComparisonField f) {
  switch (f) {
    case ComparisonField::Memory: return "peak_memory_bytes";
    case ComparisonField::Throughput: return "tokens_per_second";
    case ComparisonField::EnergyPerToken: return "energy_per_token";
    case ComparisonField::LoadTime: return "load_time_s";
  }
  return "?";
}

std::optional<double> field_value(const PerfReport& r, ComparisonField f) {
  switch (f) {
    case ComparisonField::Memory:
      if (r.peak_memory_bytes) return static_cast<double>(*r.peak_memory_bytes);
      return std::nullopt;
    case ComparisonField::Throughput: return r.tokens_per_second;
    case ComparisonField::EnergyPerToken: return r.energy_per_token;
    case ComparisonField::LoadTime: return r.load_time_s;
  }
  return std::nullopt;
}

}  // namespace

std::vector<ComparisonField> common_fields(const PerfReport& a, const PerfReport& b) {
  std::vector<ComparisonField> out;
  for (auto f : {ComparisonField::Memory, ComparisonField::Throughput, ComparisonField::EnergyPerToken,
                 ComparisonField::LoadTime}) {
    const auto va = field_value(a, f);
    if (va && *va != 0.0 && field_value(b, f)) out.push_back(f);
  }
  return out;
}

ComparisonRow derive_comparison(const PerfReport& a, const PerfReport& b,
                                const std::vector<ComparisonField>& fields) {
  ComparisonRow row;
  row.baseline = a.variant_name;
  row.candidate = b.variant_name;
  for (ComparisonField f : fields) {
    const auto va = field_value(a, f);
    const auto vb = field_value(b, f);
    if (!va || !vb) {
      throw ProfilerError(ProfilerError::Kind::MissingField,
                          std::string(field_name(f)) + " missing in '" +
                              (va ? b.variant_name : a.variant_name) + "'");
    }
    if (*va == 0.0) {
      throw ProfilerError(ProfilerError::Kind::MissingField,
                          std::string(field_name(f)) + " is zero in baseline '" + a.variant_name + "'");
    }
    switch (f) {
      case ComparisonField::Memory: row.memory_reduction_pct = 100.0 * (*va - *vb) / *va; break;
      case ComparisonField::Throughput:
        row.slowdown_pct = 100.0 * (*va - *vb) / *va;
        row.speedup_x = *vb / *va;
        break;
      case ComparisonField::EnergyPerToken:
        row.energy_per_token_increase_pct = 100.0 * (*vb - *va) / *va;
        break;
      case ComparisonField::LoadTime: row.load_time_reduction_pct = 100.0 * (*va - *vb) / *va; break;
    }
  }
  return row;
}

std::string format_comparison(const ComparisonRow& row) {
  std::string out = row.candidate + " vs " + row.baseline + ":";
  auto pct = [](double v, bool sign) {
    std::string s = format_fixed(v, 1);
    if (s == "-0.0") s = "0.0";
    if (sign && s[0] != '-') s = "+" + s;
    return s + "%";
  };
  if (row.memory_reduction_pct) out += " memory reduction " + pct(*row.memory_reduction_pct, false) + ";";
  if (row.slowdown_pct) out += " slowdown " + pct(*row.slowdown_pct, false) + ";";
  if (row.speedup_x) out += " speedup " + format_fixed(*row.speedup_x, 1) + "x;";
  if (row.energy_per_token_increase_pct) {
    out += " energy/token " + pct(*row.energy_per_token_increase_pct, true) + ";";
  }
  if (row.load_time_reduction_pct) {
    out += " load-time reduction " + pct(*row.load_time_reduction_pct, false) + ";";
  }
  if (out.back() == ';') out.pop_back();
  return out;
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json opt_rounded(const std::optional<double>& v) {
  return v ? json(std::stod(format_fixed(*v, 1))) : json(nullptr);
}

}  // namespace

json to_json(const ComparisonRow& row) {
  return {
      {"baseline", row.baseline},
      {"candidate", row.candidate},
      {"memory_reduction_pct", opt_rounded(row.memory_reduction_pct)},
      {"slowdown_pct", opt_rounded(row.slowdown_pct)},
      {"speedup_x", opt_rounded(row.speedup_x)},
      {"energy_per_token_increase_pct", opt_rounded(row.energy_per_token_increase_pct)},
      {"load_time_reduction_pct", opt_rounded(row.load_time_reduction_pct)},
      {"summary", format_comparison(row)},
  };
}

json to_json(const PerfReport& r) {
  return {
      {"variant_name", r.variant_name},
      {"load_time_s", opt(r.load_time_s)},
      {"tokens_generated", r.tokens_generated},
      {"elapsed_s", r.elapsed_s},
      {"tokens_per_second", r.tokens_per_second},
      {"median_tokens_per_second", r.median_tokens_per_second},
      {"mean_tokens_per_second", r.mean_tokens_per_second},
      {"peak_memory_bytes", opt(r.peak_memory_bytes)},
      {"peak_probe_memory_bytes", opt(r.peak_probe_memory_bytes)},
      {"energy_j", opt(r.energy_j)},
      {"energy_per_token", opt(r.energy_per_token)},
      {"token_count_exact", r.token_count_exact},
      {"run_count", r.run_count},
      {"per_run_throughputs", r.per_run_throughputs},
      {"timing_convention", r.timing_convention},
  };
}

PerfReport perf_report_from_json(const json& j) {
  auto get_opt = [&]<typename T>(const char* key, std::optional<T>& out) {
    if (const auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
  };
  try {
    PerfReport r;
    r.variant_name = j.at("variant_name").get<std::string>();
    r.tokens_generated = j.at("tokens_generated").get<std::int64_t>();
    r.elapsed_s = j.at("elapsed_s").get<double>();
    r.tokens_per_second = j.value("tokens_per_second", tokens_per_second(r.tokens_generated, r.elapsed_s));
    r.median_tokens_per_second = j.value("median_tokens_per_second", r.tokens_per_second);
    r.mean_tokens_per_second = j.value("mean_tokens_per_second", r.tokens_per_second);
    get_opt("load_time_s", r.load_time_s);
    get_opt("peak_memory_bytes", r.peak_memory_bytes);
    get_opt("peak_probe_memory_bytes", r.peak_probe_memory_bytes);
    get_opt("energy_j", r.energy_j);
    get_opt("energy_per_token", r.energy_per_token);
    if (r.energy_j && !r.energy_per_token && r.tokens_generated > 0) {
      r.energy_per_token = *r.energy_j / static_cast<double>(r.tokens_generated);
    }
    r.token_count_exact = j.value("token_count_exact", false);
    r.run_count = j.value("run_count", 1);
    r.per_run_throughputs = j.value("per_run_throughputs", std::vector<double>{});
    r.timing_convention = j.value("timing_convention", std::string());
    return r;
  } catch (const json::exception& e) {
    throw ProfilerError(ProfilerError::Kind::MissingField, std::string("perf report: ") + e.what());
  }
}

std::string perf_csv_header() {
  return csv::join({"variant", "load_s", "tok_s", "peak_mem_bytes", "energy_j", "j_per_token",
                    "exact_tokens"});
}

std::string perf_csv_row(const PerfReport& r) {
  auto num = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return csv::join({r.variant_name, num(r.load_time_s), format_double(r.tokens_per_second),
                    r.peak_memory_bytes ? std::to_string(*r.peak_memory_bytes) : "", num(r.energy_j),
                    num(r.energy_per_token), r.token_count_exact ? "true" : "false"});
}

}  // namespace intentkit
