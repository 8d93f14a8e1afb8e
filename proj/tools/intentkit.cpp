// intentkit: dataset generation, evaluation, benchmarking, GGUF inspection,
// Pareto analysis and combined reporting.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "intentkit/backends.hpp"
#include "intentkit/datagen.hpp"
#include "intentkit/evaluator.hpp"
#include "intentkit/gguf.hpp"
#include "intentkit/io.hpp"
#include "intentkit/pareto.hpp"
#include "intentkit/profiler.hpp"
#include "intentkit/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace intentkit;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The effective value of every option on `app`, for provenance.
json effective_config(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (res.size() == 1) {
        j[name] = res.front();
      } else {
        j[name] = res;
      }
    } else {
      j[name] = opt->get_default_str();
    }
  }
  // Never echo secrets; only the variable name is an option.
  return j;
}

void check_output_path(const std::string& path) {
  if (path.empty()) return;
  const fs::path parent = fs::absolute(fs::path(path)).parent_path();
  if (!fs::is_directory(parent)) throw UsageError("output directory does not exist: " + parent.string());
}

void write_json(const std::string& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Shared backend options

struct BackendOpts {
  std::string kind = "oracle";
  std::string endpoint;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string command;
  double temperature = 0.0;
  int max_tokens = 64;
  int timeout_ms = 30'000;
  int retries = 2;
  std::string data_dir;
};

void add_backend_options(CLI::App* app, BackendOpts& o) {
  app->add_option("--backend", o.kind, "Backend kind")
      ->check(CLI::IsMember({"oracle", "http", "subprocess"}));
  app->add_option("--endpoint", o.endpoint, "Base URL of a chat-completions API (http)");
  app->add_option("--model", o.model, "Model name sent to the API (http)");
  app->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key (http)");
  app->add_option("--command", o.command, "Command template with a {prompt} placeholder (subprocess)");
  app->add_option("--temperature", o.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
  app->add_option("--max-tokens", o.max_tokens, "Completion token limit")->check(CLI::PositiveNumber);
  app->add_option("--timeout-ms", o.timeout_ms, "Per-request timeout")->check(CLI::PositiveNumber);
  app->add_option("--retries", o.retries, "Retries per request")->check(CLI::NonNegativeNumber);
  app->add_option("--data-dir", o.data_dir, "Catalog/lexicon directory (oracle)")->check(CLI::ExistingDirectory);
}

fs::path data_dir_or_default(const std::string& d) { return d.empty() ? default_data_dir() : fs::path(d); }

BackendConfig make_backend(const BackendOpts& o) {
  BackendConfig c;
  c.kind = *parse_backend_kind(o.kind);
  c.endpoint_url = o.endpoint;
  c.model_name = o.model;
  c.api_key_env = o.api_key_env;
  c.command_template = o.command;
  c.temperature = o.temperature;
  c.max_tokens = o.max_tokens;
  c.timeout = std::chrono::milliseconds(o.timeout_ms);
  c.retries = o.retries;
  if (c.kind == BackendKind::Oracle) {
    const fs::path dir = data_dir_or_default(o.data_dir);
    c.oracle = std::make_shared<OracleParser>(load_catalog(dir / "catalog.json"),
                                              load_lexicons(dir / "lexicons.json"));
  }
  try {
    validate_config(c);
  } catch (const BackendError& e) {
    throw UsageError(e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  std::size_t n = 3000;
  std::uint64_t seed = 42;
  std::string out;
  std::string data_dir;
  std::vector<std::string> languages{"en", "hr", "es"};
  bool clean = false;
  double p_linguistic = 0.25;
  double p_contextual = 0.20;
  double p_codeswitch = 0.10;
  bool number_words = false;
  double train_fraction = 0.0;
  std::string train_out;
  std::string test_out;
  std::string metaprompts_out;
};

int run_gen(const GenOpts& o, const CLI::App* app) {
  for (const auto& p : {o.out, o.train_out, o.test_out, o.metaprompts_out}) check_output_path(p);
  if ((o.train_out.empty() != o.test_out.empty()) || (!o.train_out.empty() && o.train_fraction <= 0.0)) {
    throw UsageError("--train-out, --test-out and --train-fraction must be given together");
  }
  GenerationSpec spec = default_generation_spec(data_dir_or_default(o.data_dir));
  spec.n_examples = o.n;
  spec.seed = o.seed;
  spec.languages = o.languages;
  spec.number_words = o.number_words;
  spec.noise.p_linguistic = o.clean ? 0.0 : o.p_linguistic;
  spec.noise.p_contextual = o.clean ? 0.0 : o.p_contextual;
  spec.noise.p_codeswitch = o.clean ? 0.0 : o.p_codeswitch;
  try {
    validate_spec(spec);
  } catch (const DatagenError& e) {
    throw UsageError(e.what());
  }

  const Dataset ds = generate_dataset(spec);
  write_file_atomic(o.out, serialize_jsonl(ds));
  std::map<std::string, std::size_t> per_language;
  std::size_t noisy = 0;
  for (const Example& ex : ds.examples) {
    ++per_language[ex.language];
    noisy += !ex.noise_tags.empty();
  }
  json meta = {{"n_examples", ds.examples.size()},
               {"seed", ds.seed},
               {"spec_fingerprint", ds.spec_fingerprint},
               {"per_language", per_language},
               {"noisy_examples", noisy},
               {"config", effective_config(app)}};
  if (!o.train_out.empty()) {
    const auto [train, test] = split_dataset(ds, o.train_fraction, o.seed);
    write_file_atomic(o.train_out, serialize_jsonl(train));
    write_file_atomic(o.test_out, serialize_jsonl(test));
    meta["split"] = {{"train", train.examples.size()}, {"test", test.examples.size()}};
  }
  if (!o.metaprompts_out.empty()) {
    std::string lines;
    for (const Example& ex : ds.examples) {
      MetapromptParams mp;
      mp.language = ex.language;
      mp.action = ex.output.action;
      mp.product = ex.output.product;
      mp.quantity = ex.output.quantity;
      mp.noise_directives = ex.noise_tags;
      lines += json{{"language", ex.language}, {"metaprompt", build_metaprompt(mp)}}.dump() + "\n";
    }
    write_file_atomic(o.metaprompts_out, lines);
  }
  write_json(o.out + ".meta.json", meta);
  std::printf("wrote %zu examples to %s", ds.examples.size(), o.out.c_str());
  for (const auto& [lang, count] : per_language) std::printf("  %s=%zu", lang.c_str(), count);
  std::printf("\n");
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string dataset;
  BackendOpts backend;
  std::string prompt_mode = "fewshot";
  std::string shots;
  std::optional<std::size_t> k;
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
  bool normalize_product = false;
  std::string out;
  std::string csv;
};

int run_eval(const EvalOpts& o, const CLI::App* app) {
  check_output_path(o.out);
  check_output_path(o.csv);
  const BackendConfig backend = make_backend(o.backend);
  EvalConfig cfg;
  cfg.prompt_mode = *parse_prompt_mode(o.prompt_mode);
  if (!o.shots.empty()) cfg.shots = load_jsonl(o.shots).examples;
  cfg.fewshot_k = o.k.value_or(cfg.shots.empty() ? 0 : 3);
  if (cfg.prompt_mode == PromptMode::FewShot && cfg.shots.size() < cfg.fewshot_k) {
    throw UsageError("--k " + std::to_string(cfg.fewshot_k) + " needs at least that many --shots examples");
  }
  cfg.shot_seed = o.seed;
  cfg.parallelism = o.parallelism;
  cfg.match.normalize_product = o.normalize_product;

  const Dataset ds = load_jsonl(o.dataset);
  const EvalReport report = evaluate_dataset(ds, backend, cfg);
  std::fputs(format_table(report).c_str(), stdout);
  if (!o.out.empty()) {
    json j = to_json(report);
    j["config"] = effective_config(app);
    j["config"]["k"] = cfg.fewshot_k;  // resolved default
    j["instruction"] = fewshot_instruction();
    write_json(o.out, j);
  }
  if (!o.csv.empty()) write_file_atomic(o.csv, per_item_csv(report));
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  BackendOpts backend;
  std::string prompts;
  std::string variant = "variant";
  int warmup = 1;
  int runs = 3;
  int interval_ms = 100;
  std::string power_command;
  std::string rapl;
  bool measure_load = false;
  std::string server_command;
  int load_timeout_ms = 120'000;
  std::string probe_prompt = "add 1 apple";
  std::optional<int> memory_pid;
  std::string out;
  std::string csv;
};

std::vector<std::string> read_prompts(const std::string& path) {
  const std::string content = read_file(path);
  std::vector<std::string> prompts;
  const bool jsonl = path.size() > 6 && path.substr(path.size() - 6) == ".jsonl";
  if (jsonl) {
    for (const Example& ex : parse_jsonl(content).examples) prompts.push_back(ex.input);
  } else {
    std::size_t start = 0;
    while (start < content.size()) {
      std::size_t nl = content.find('\n', start);
      if (nl == std::string::npos) nl = content.size();
      if (std::string line = text::trim(std::string_view(content).substr(start, nl - start)); !line.empty()) {
        prompts.push_back(std::move(line));
      }
      start = nl + 1;
    }
  }
  if (prompts.empty()) throw UsageError("no prompts in " + path);
  return prompts;
}

int run_bench(const BenchOpts& o, const CLI::App* app) {
  check_output_path(o.out);
  check_output_path(o.csv);
  const BackendConfig backend = make_backend(o.backend);
  const std::vector<std::string> prompts = read_prompts(o.prompts);

  BenchConfig cfg;
  cfg.variant_name = o.variant;
  cfg.warmup = o.warmup;
  cfg.runs = o.runs;
  cfg.sampler.interval = std::chrono::milliseconds(o.interval_ms);
  cfg.sampler.power_command = o.power_command;
  if (!o.rapl.empty()) cfg.sampler.rapl_energy_file = o.rapl;
  if (o.memory_pid) cfg.memory_pid = *o.memory_pid;

  std::unique_ptr<BackgroundProcess> server;
  std::optional<double> load_time;
  if (!o.server_command.empty()) {
    const auto started = std::chrono::steady_clock::now();
    server = std::make_unique<BackgroundProcess>(o.server_command);
    if (!cfg.memory_pid) cfg.memory_pid = server->pid();
    LoadProbe probe{o.probe_prompt, std::chrono::milliseconds(o.load_timeout_ms)};
    load_time = measure_load(backend, probe, started);
  } else if (o.measure_load) {
    LoadProbe probe{o.probe_prompt, std::chrono::milliseconds(o.load_timeout_ms)};
    load_time = measure_load(backend, probe);
  }

  PerfReport report = run_generation_benchmark(backend, prompts, cfg);
  report.load_time_s = load_time;
  const json j = to_json(report);
  std::printf("%s\n", perf_csv_header().c_str());
  std::printf("%s\n", perf_csv_row(report).c_str());
  std::printf("median %.2f tok/s over %d runs (%s)\n", report.median_tokens_per_second, report.run_count,
              report.timing_convention.c_str());
  if (!report.token_count_exact) std::printf("token counts are whitespace estimates\n");
  if (!o.out.empty()) {
    json doc = j;
    doc["config"] = effective_config(app);
    write_json(o.out, doc);
  }
  if (!o.csv.empty()) write_file_atomic(o.csv, perf_csv_header() + "\n" + perf_csv_row(report) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectOpts {
  std::string file;
  bool json = false;
  std::string out;
};

int run_inspect(const InspectOpts& o) {
  check_output_path(o.out);
  const gguf::File f = gguf::parse_file(o.file);
  const gguf::FootprintReport fp = gguf::footprint_report(f.tensors);
  const json j = gguf::to_json(f, fp);
  if (o.json) {
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::fputs(gguf::format_table(f, fp).c_str(), stdout);
  }
  if (!o.out.empty()) write_json(o.out, j);
  return 0;
}

// ---------------------------------------------------------------------------
// pareto

struct ParetoOpts {
  std::string points;
  std::string objectives = "accuracy,speed";
  std::string format = "text";
  std::string out;
};

std::vector<VariantPoint> load_points(const std::string& path) {
  const std::string content = read_file(path);
  const bool is_json = path.size() > 5 && path.substr(path.size() - 5) == ".json";
  return is_json ? parse_points_json(content) : parse_points_csv(content);
}

int run_pareto(const ParetoOpts& o) {
  check_output_path(o.out);
  ReportFormat format;
  std::vector<Objective> objectives;
  try {
    format = parse_report_format(o.format);
    objectives = parse_objectives(o.objectives);
  } catch (const ParetoError& e) {
    throw UsageError(e.what());
  }
  const FrontierResult r = compute_frontier(load_points(o.points), objectives);
  const std::string doc = emit_tradeoff_report(r, format);
  std::fputs(doc.c_str(), stdout);
  if (doc.empty() || doc.back() != '\n') std::fputs("\n", stdout);
  if (!o.out.empty()) write_file_atomic(o.out, doc);
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  std::string eval;
  std::vector<std::string> perf;
  std::string points;
  std::string objectives = "accuracy,speed";
  std::string out;
  std::string csv;
};

int run_report(const ReportOpts& o, const CLI::App* app) {
  check_output_path(o.out);
  check_output_path(o.csv);
  if (o.eval.empty() && o.perf.empty() && o.points.empty()) {
    throw UsageError("give at least one of --eval, --perf, --points");
  }
  json doc = {{"config", effective_config(app)}};
  std::string text;

  if (!o.eval.empty()) {
    const json e = json::parse(read_file(o.eval));
    json summary = json::object();
    for (const char* key : {"n_total", "n_matched", "accuracy", "ci95", "n_backend_errors",
                            "accuracy_excluding_backend_errors", "per_language", "field_accuracy",
                            "error_counts", "config_fingerprint"}) {
      if (e.contains(key)) summary[key] = e[key];
    }
    doc["accuracy"] = summary;
    char line[160];
    std::snprintf(line, sizeof line, "exact-match accuracy %.3f (%s/%s)\n", e.value("accuracy", 0.0),
                  e.value("n_matched", json(0)).dump().c_str(), e.value("n_total", json(0)).dump().c_str());
    text += line;
  }

  if (!o.perf.empty()) {
    std::vector<PerfReport> reports;
    for (const auto& p : o.perf) reports.push_back(perf_report_from_json(json::parse(read_file(p))));
    std::string table = perf_csv_header() + "\n";
    json perf = json::array();
    for (const auto& r : reports) {
      table += perf_csv_row(r) + "\n";
      perf.push_back(to_json(r));
    }
    json comparisons = json::array();
    text += "\n" + table;
    for (std::size_t i = 1; i < reports.size(); ++i) {
      const auto fields = common_fields(reports[0], reports[i]);
      const ComparisonRow row = derive_comparison(reports[0], reports[i], fields);
      comparisons.push_back(to_json(row));
      text += format_comparison(row) + "\n";
    }
    doc["performance"] = perf;
    doc["comparisons"] = comparisons;
    if (!o.csv.empty()) write_file_atomic(o.csv, table);
  }

  if (!o.points.empty()) {
    std::vector<Objective> objectives;
    try {
      objectives = parse_objectives(o.objectives);
    } catch (const ParetoError& e) {
      throw UsageError(e.what());
    }
    const FrontierResult r = compute_frontier(load_points(o.points), objectives);
    doc["pareto"] = json::parse(emit_tradeoff_report(r, ReportFormat::Json));
    text += "\n" + emit_tradeoff_report(r, ReportFormat::Text);
  }

  std::fputs(text.c_str(), stdout);
  if (!o.out.empty()) write_json(o.out, doc);
  return 0;
}

std::string error_label(const std::exception& e) {
  if (auto* x = dynamic_cast<const BackendError*>(&e)) return "backend/" + std::string(to_string(x->kind()));
  if (auto* x = dynamic_cast<const gguf::GgufError*>(&e)) return "gguf/" + std::string(gguf::to_string(x->kind()));
  if (dynamic_cast<const DatagenError*>(&e)) return "datagen";
  if (dynamic_cast<const EvalError*>(&e)) return "eval";
  if (dynamic_cast<const ProfilerError*>(&e)) return "profiler";
  if (dynamic_cast<const ParetoError*>(&e)) return "pareto";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const IntentParseError*>(&e)) return "intent";
  if (dynamic_cast<const json::exception*>(&e)) return "json";
  return "error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual cart-intent extraction toolkit: data, evaluation, profiling, analysis"};
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI config file; [subcommand] sections, flags take precedence");

  GenOpts gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic intent dataset (JSON Lines)");
  gen_cmd->add_option("--n", gen.n, "Number of examples")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Output JSONL path")->required();
  gen_cmd->add_option("--data-dir", gen.data_dir, "Catalog/templates/noise directory")->check(CLI::ExistingDirectory);
  gen_cmd->add_option("--languages", gen.languages, "Language cycle")->delimiter(',');
  gen_cmd->add_flag("--clean", gen.clean, "Disable all noise");
  gen_cmd->add_option("--p-linguistic", gen.p_linguistic, "Typo/slang probability")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--p-contextual", gen.p_contextual, "Greeting/emoji/brand probability")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--p-codeswitch", gen.p_codeswitch, "Code-switch probability")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_flag("--number-words", gen.number_words, "Render small quantities as words");
  gen_cmd->add_option("--train-fraction", gen.train_fraction, "Train share for --train-out/--test-out")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--train-out", gen.train_out, "Train split JSONL path");
  gen_cmd->add_option("--test-out", gen.test_out, "Test split JSONL path");
  gen_cmd->add_option("--metaprompts-out", gen.metaprompts_out, "Write one generation metaprompt per example");

  EvalOpts ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a backend on a dataset by exact match");
  eval_cmd->add_option("--dataset", ev.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  add_backend_options(eval_cmd, ev.backend);
  eval_cmd->add_option("--prompt-mode", ev.prompt_mode, "Prompt construction")
      ->check(CLI::IsMember({"fewshot", "raw"}));
  eval_cmd->add_option("--shots", ev.shots, "Demonstration pool JSONL")->check(CLI::ExistingFile);
  eval_cmd->add_option("--k", ev.k, "Demonstrations per prompt (default 3 with --shots, else 0)");
  eval_cmd->add_option("--seed", ev.seed, "Demonstration selection seed");
  eval_cmd->add_option("--parallelism", ev.parallelism, "Concurrent requests")->check(CLI::Range(1, 256));
  eval_cmd->add_flag("--normalize-product", ev.normalize_product, "Case/whitespace-insensitive product match");
  eval_cmd->add_option("--out", ev.out, "Report JSON path");
  eval_cmd->add_option("--csv", ev.csv, "Per-item CSV path");

  BenchOpts bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Measure load time, throughput, memory and energy");
  add_backend_options(bench_cmd, bench.backend);
  bench_cmd->add_option("--prompts", bench.prompts, "Prompt file: one per line, or a dataset .jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--variant", bench.variant, "Variant name in the report");
  bench_cmd->add_option("--warmup", bench.warmup, "Unmeasured passes")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--runs", bench.runs, "Measured passes")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--interval-ms", bench.interval_ms, "Sampler cadence")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--power-command", bench.power_command, "Command printing \"watts[,MiB]\"");
  bench_cmd->add_option("--rapl", bench.rapl, "Energy counter file (microjoules)")->check(CLI::ExistingFile);
  bench_cmd->add_flag("--measure-load", bench.measure_load, "Time the first successful probe completion");
  bench_cmd->add_option("--server-command", bench.server_command,
                        "Start this server, time it until ready, and sample its memory");
  bench_cmd->add_option("--load-timeout-ms", bench.load_timeout_ms, "Readiness deadline")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--probe-prompt", bench.probe_prompt, "Prompt used as the readiness probe");
  bench_cmd->add_option("--memory-pid", bench.memory_pid, "Also sample this process tree's RSS");
  bench_cmd->add_option("--out", bench.out, "PerfReport JSON path");
  bench_cmd->add_option("--csv", bench.csv, "PerfReport CSV path");

  InspectOpts insp;
  CLI::App* inspect_cmd = app.add_subcommand("inspect", "Read a GGUF file's metadata and footprint");
  inspect_cmd->add_option("file", insp.file, "GGUF file")->required()->check(CLI::ExistingFile);
  inspect_cmd->add_flag("--json", insp.json, "Print JSON instead of a table");
  inspect_cmd->add_option("--out", insp.out, "Write the JSON report here");

  ParetoOpts par;
  CLI::App* pareto_cmd = app.add_subcommand("pareto", "Pareto frontier over model variants");
  pareto_cmd->add_option("--points", par.points, "Variants as CSV or .json")->required()->check(CLI::ExistingFile);
  pareto_cmd->add_option("--objectives", par.objectives, "e.g. accuracy,speed or accuracy,memory");
  pareto_cmd->add_option("--format", par.format, "text, csv or json");
  pareto_cmd->add_option("--out", par.out, "Write the report here");

  ReportOpts rep;
  CLI::App* report_cmd = app.add_subcommand("report", "Combine eval, perf and Pareto results");
  report_cmd->add_option("--eval", rep.eval, "Eval report JSON")->check(CLI::ExistingFile);
  report_cmd->add_option("--perf", rep.perf, "PerfReport JSON; the first is the baseline")->check(CLI::ExistingFile);
  report_cmd->add_option("--points", rep.points, "Variants for the Pareto section")->check(CLI::ExistingFile);
  report_cmd->add_option("--objectives", rep.objectives, "Pareto objectives");
  report_cmd->add_option("--out", rep.out, "Combined JSON path");
  report_cmd->add_option("--csv", rep.csv, "Performance table CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen, gen_cmd);
    if (eval_cmd->parsed()) return run_eval(ev, eval_cmd);
    if (bench_cmd->parsed()) return run_bench(bench, bench_cmd);
    if (inspect_cmd->parsed()) return run_inspect(insp);
    if (pareto_cmd->parsed()) return run_pareto(par);
    if (report_cmd->parsed()) return run_report(rep, report_cmd);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error [%s]: %s\n", error_label(e).c_str(), e.what());
    return 1;
  }
  return 2;
}
