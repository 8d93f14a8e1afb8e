#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "intentkit/evaluator.hpp"
#include "test_support.hpp"

namespace intentkit {
namespace {

// Wilson bounds are the roots in p of (k/n - p)^2 = z^2 p (1 - p) / n.
std::pair<double, double> wilson_by_quadratic(double k, double n, double z) {
  const double ph = k / n;
  const double a = 1.0 + z * z / n;
  const double b = -(2.0 * ph + z * z / n);
  const double c = ph * ph;
  const double disc = std::sqrt(b * b - 4.0 * a * c);
  return {(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)};
}

TEST(Wilson, NinetyNineOfHundred) {
  const auto [lo, hi] = wilson_interval(99, 100, 1.96);
  EXPECT_NEAR(lo, 0.946, 0.001);
  EXPECT_NEAR(hi, 0.998, 0.001);
}

TEST(Wilson, EdgesAreExact) {
  for (std::int64_t n : {1, 2, 10, 3000}) {
    EXPECT_EQ(wilson_interval(0, n, 1.96).first, 0.0);
    EXPECT_EQ(wilson_interval(n, n, 1.96).second, 1.0);
  }
}

TEST(Wilson, DomainErrors) {
  for (auto [k, n, z] : {std::tuple{1, 0, 1.96}, {-1, 5, 1.96}, {6, 5, 1.96}, {1, 5, 0.0}, {1, 5, NAN}}) {
    try {
      wilson_interval(k, n, z);
      ADD_FAILURE();
    } catch (const EvalError& e) {
      EXPECT_EQ(e.kind(), EvalError::Kind::DomainError);
    }
  }
}

TEST(WilsonProperty, AgreesWithQuadraticAndBracketsEstimate) {
  Rng rng(31);
  for (int i = 0; i < 5000; ++i) {
    const auto n = static_cast<std::int64_t>(1 + rng.below(5000));
    const auto k = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n) + 1));
    const double z = 0.5 + 3.0 * rng.uniform01();
    const auto [lo, hi] = wilson_interval(k, n, z);
    const auto [qlo, qhi] = wilson_by_quadratic(k, n, z);
    EXPECT_NEAR(lo, std::max(0.0, qlo), 1e-9);
    EXPECT_NEAR(hi, std::min(1.0, qhi), 1e-9);
    const double p = static_cast<double>(k) / n;
    EXPECT_LE(0.0, lo);
    EXPECT_LE(lo, p);
    EXPECT_LE(p, hi);
    EXPECT_LE(hi, 1.0);
  }
}

// ---------------------------------------------------------------- aggregation

ItemResult item(std::size_t id, std::string lang, ErrorClass cls) {
  ItemResult it;
  it.id = id;
  it.language = std::move(lang);
  it.gold = {Action::Add, "Beer", 2};
  it.outcome.matched = cls == ErrorClass::None;
  it.outcome.error_class = cls;
  if (cls == ErrorClass::None) it.outcome.predicted = it.gold;
  if (cls == ErrorClass::WrongQuantity) it.outcome.predicted = IntentRecord{Action::Add, "Beer", 3};
  return it;
}

std::vector<ItemResult> random_items(Rng& rng, std::size_t n) {
  static const ErrorClass classes[] = {ErrorClass::None, ErrorClass::None, ErrorClass::None,
                                       ErrorClass::InvalidJson, ErrorClass::WrongQuantity,
                                       ErrorClass::BackendError};
  static const char* langs[] = {"en", "es", "hr"};
  std::vector<ItemResult> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back(item(i, langs[rng.below(3)], classes[rng.below(6)]));
  return items;
}

TEST(Aggregate, CountsAndBreakdowns) {
  const EvalReport r = aggregate_report({item(0, "en", ErrorClass::None), item(1, "hr", ErrorClass::BackendError),
                                         item(2, "en", ErrorClass::WrongQuantity), item(3, "hr", ErrorClass::None)});
  EXPECT_EQ(r.n_total, 4u);
  EXPECT_EQ(r.n_matched, 2u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.n_backend_errors, 1u);
  EXPECT_DOUBLE_EQ(*r.accuracy_excluding_backend_errors, 2.0 / 3.0);
  EXPECT_EQ(r.per_language.at("en").n_matched, 1u);
  EXPECT_EQ(r.error_counts.at(ErrorClass::WrongQuantity), 1u);
  EXPECT_FALSE(r.error_counts.count(ErrorClass::None));
  EXPECT_DOUBLE_EQ(r.field_accuracy.action, 0.75);
  EXPECT_DOUBLE_EQ(r.field_accuracy.quantity, 0.5);
}

TEST(Aggregate, EmptyDataset) {
  try {
    aggregate_report({});
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalError::Kind::EmptyDataset);
  }
}

TEST(AggregateProperty, Invariants) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const EvalReport r = aggregate_report(random_items(rng, 1 + rng.below(300)));
    EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(r.n_matched) / r.n_total);
    std::size_t lang_total = 0, errors = 0;
    for (const auto& [_, s] : r.per_language) lang_total += s.n_total;
    for (const auto& [_, c] : r.error_counts) errors += c;
    EXPECT_EQ(lang_total, r.n_total);
    EXPECT_EQ(errors + r.n_matched, r.n_total);
    EXPECT_LE(r.ci95.first, r.accuracy);
    EXPECT_LE(r.accuracy, r.ci95.second);
  }
}

TEST(AggregateProperty, PermutationInvariant) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto items = random_items(rng, 1 + rng.below(200));
    const EvalReport a = aggregate_report(items);
    rng.shuffle(std::span<ItemResult>(items));
    EXPECT_EQ(aggregate_report(items), a);
  }
}

TEST(AggregateProperty, FixingAMismatchNeverLowersAccuracy) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto items = random_items(rng, 1 + rng.below(100));
    const double before = aggregate_report(items).accuracy;
    for (auto& it : items) {
      if (!it.outcome.matched) {
        it = item(it.id, it.language, ErrorClass::None);
        break;
      }
    }
    EXPECT_GE(aggregate_report(items).accuracy, before);
  }
}

// ---------------------------------------------------------------- end to end

const GenerationSpec& spec() {
  static const GenerationSpec s = default_generation_spec(testing::data_dir());
  return s;
}

BackendConfig oracle_backend() {
  BackendConfig c;
  c.kind = BackendKind::Oracle;
  c.oracle = std::make_shared<const OracleParser>(spec().catalog, load_lexicons(testing::data_dir() / "lexicons.json"));
  return c;
}

Dataset dataset(std::size_t n, bool noisy) {
  GenerationSpec s = spec();
  s.n_examples = n;
  if (!noisy) s.noise.p_linguistic = s.noise.p_contextual = s.noise.p_codeswitch = 0.0;
  return generate_dataset(s);
}

TEST(Evaluate, OracleIsPerfectOnCleanData) {
  EvalConfig cfg;
  cfg.prompt_mode = PromptMode::Raw;
  const EvalReport r = evaluate_dataset(dataset(300, false), oracle_backend(), cfg);
  EXPECT_EQ(r.n_matched, 300u);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.ci95.second, 1.0);
  EXPECT_TRUE(r.error_counts.empty());
}

TEST(Evaluate, ParallelismDoesNotChangeTheReport) {
  const Dataset ds = dataset(300, true);
  EvalConfig cfg;
  cfg.shots = dataset(30, false).examples;
  cfg.parallelism = 1;
  const EvalReport a = evaluate_dataset(ds, oracle_backend(), cfg);
  cfg.parallelism = 8;
  const EvalReport b = evaluate_dataset(ds, oracle_backend(), cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Evaluate, AllMalformedIsInvalidJson) {
  BackendConfig c;
  c.kind = BackendKind::Subprocess;
  c.command_template = "echo 'no json here' # {prompt}";
  c.retries = 0;
  EvalConfig cfg;
  cfg.prompt_mode = PromptMode::Raw;
  cfg.parallelism = 2;
  const EvalReport r = evaluate_dataset(dataset(12, false), c, cfg);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.ci95.first, 0.0);
  EXPECT_EQ(r.error_counts, (std::map<ErrorClass, std::size_t>{{ErrorClass::InvalidJson, 12}}));
}

TEST(Evaluate, BackendFailuresAreScoredNotThrown) {
  BackendConfig c;
  c.kind = BackendKind::Subprocess;
  c.command_template = "exit 7 # {prompt}";
  c.retries = 0;
  EvalConfig cfg;
  cfg.prompt_mode = PromptMode::Raw;
  const EvalReport r = evaluate_dataset(dataset(5, false), c, cfg);
  EXPECT_EQ(r.n_backend_errors, 5u);
  EXPECT_FALSE(r.accuracy_excluding_backend_errors);
  EXPECT_NE(r.per_item[0].backend_error.find("NonZeroExit"), std::string::npos) << r.per_item[0].backend_error;
}

TEST(Evaluate, ConfigErrors) {
  auto kind = [](const Dataset& ds, const BackendConfig& b, const EvalConfig& c) {
    try {
      evaluate_dataset(ds, b, c);
    } catch (const EvalError& e) {
      return e.kind();
    }
    ADD_FAILURE();
    return EvalError::Kind::DomainError;
  };
  EvalConfig cfg;
  EXPECT_EQ(kind(Dataset{}, oracle_backend(), cfg), EvalError::Kind::EmptyDataset);
  cfg.fewshot_k = 3;  // no shots supplied
  EXPECT_EQ(kind(dataset(3, false), oracle_backend(), cfg), EvalError::Kind::ConfigError);
  cfg.prompt_mode = PromptMode::Raw;
  cfg.parallelism = 0;
  EXPECT_EQ(kind(dataset(3, false), oracle_backend(), cfg), EvalError::Kind::ConfigError);
}

TEST(Fingerprint, IgnoresParallelismOnly) {
  const Dataset ds = dataset(20, false);
  EvalConfig cfg;
  cfg.prompt_mode = PromptMode::Raw;
  const auto base = eval_fingerprint(ds, oracle_backend(), cfg);
  cfg.parallelism = 16;
  EXPECT_EQ(eval_fingerprint(ds, oracle_backend(), cfg), base);
  cfg.match.normalize_product = true;
  EXPECT_NE(eval_fingerprint(ds, oracle_backend(), cfg), base);
  cfg.match.normalize_product = false;
  Dataset other = ds;
  other.examples.pop_back();
  EXPECT_NE(eval_fingerprint(other, oracle_backend(), cfg), base);
}

TEST(Output, TableAndCsv) {
  const EvalReport r = aggregate_report({item(0, "en", ErrorClass::None), item(1, "hr", ErrorClass::InvalidJson)});
  const std::string t = format_table(r);
  EXPECT_NE(t.find("accuracy 0.500 (1/2)"), std::string::npos) << t;
  const auto rows = csv::parse(per_item_csv(r));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2][3], "InvalidJson");
  EXPECT_EQ(rows[1][4], R"({"action":"add","product":"Beer","quantity":2})");
}

}  // namespace
}  // namespace intentkit
