#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "intentkit/datagen.hpp"
#include "intentkit/text.hpp"
#include "test_support.hpp"

namespace intentkit {
namespace {

const GenerationSpec& shipped_spec() {
  static const GenerationSpec spec = default_generation_spec(testing::data_dir());
  return spec;
}

GenerationSpec clean_spec(std::size_t n, std::uint64_t seed) {
  GenerationSpec s = shipped_spec();
  s.n_examples = n;
  s.seed = seed;
  s.noise.p_linguistic = s.noise.p_contextual = s.noise.p_codeswitch = 0.0;
  return s;
}

CatalogEntry lip_balm() {
  CatalogEntry e;
  e.canonical_name = "Lip Balm";
  e.forms["en"] = {"Lip Balm", "", ""};
  return e;
}

// ------------------------------------------------------------- rendering

TEST(Render, EnglishPluralBySuffix) {
  EXPECT_EQ(render_utterance("Add {qty} {product_form} to my cart", lip_balm(), 2, "en"),
            "Add 2 Lip Balms to my cart");
}

TEST(Render, CroatianPaucal) {
  CatalogEntry e;
  e.canonical_name = "Šampon";
  e.forms["hr"] = {"šampon", "šampona", "šampona"};
  EXPECT_EQ(render_utterance("Dodaj {qty} {product_form}", e, 3, "hr"), "Dodaj 3 šampona");
}

TEST(Render, ShippedCroatianShampooForms) {
  const auto& cat = shipped_spec().catalog;
  const auto it = std::find_if(cat.begin(), cat.end(), [](const CatalogEntry& e) { return e.canonical_name == "Shampoo"; });
  ASSERT_NE(it, cat.end());
  EXPECT_EQ(render_utterance("Dodaj {qty} {product_form}", *it, 3, "hr"), "Dodaj 3 šampona");
  EXPECT_EQ(render_utterance("Dodaj {qty} {product_form}", *it, 1, "hr"), "Dodaj 1 šampon");
}

TEST(Render, QuantityOneIsAlwaysSingular) {
  for (const auto& e : shipped_spec().catalog) {
    for (const auto& [lang, forms] : e.forms) EXPECT_EQ(select_surface_form(e, 1, lang), forms.singular);
  }
}

TEST(Render, CanonicalPlaceholderAndOverride) {
  EXPECT_EQ(render_utterance("{product} x{qty}", lip_balm(), 4, "en", "four"), "Lip Balm xfour");
}

TEST(Render, Errors) {
  try {
    render_utterance("Add {count} {product_form}", lip_balm(), 2, "en");
    FAIL();
  } catch (const DatagenError& e) {
    EXPECT_EQ(e.kind(), DatagenError::Kind::UnknownPlaceholder);
  }
  try {
    render_utterance("Dodaj {qty} {product_form}", lip_balm(), 2, "hr");
    FAIL();
  } catch (const DatagenError& e) {
    EXPECT_EQ(e.kind(), DatagenError::Kind::MissingSurfaceForm);
  }
}

// ------------------------------------------------------------- quantities

TEST(Quantity, PointMass) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_quantity(rng, {{5, 5, 1.0}}), 5);
}

TEST(Quantity, InvalidWeights) {
  Rng rng(5);
  EXPECT_THROW(sample_quantity(rng, {{1, 1, 0.5}}), DatagenError);
  EXPECT_THROW(sample_quantity(rng, {}), DatagenError);
  EXPECT_THROW(validate_weights({{0, 1, 1.0}}), DatagenError);
  EXPECT_NO_THROW(validate_weights(default_quantity_weights()));
}

// Pearson chi-square over the declared buckets. With 8 buckets the statistic
// has 7 degrees of freedom; its 0.99 quantile is 18.475.
TEST(Quantity, DefaultTablePassesChiSquare) {
  const QuantityWeights w = default_quantity_weights();
  ASSERT_EQ(w.size(), 8u);
  constexpr int kDraws = 10'000;
  Rng rng(20240611);
  std::vector<int> observed(w.size(), 0);
  for (int i = 0; i < kDraws; ++i) {
    const std::int64_t q = sample_quantity(rng, w);
    const auto b = std::find_if(w.begin(), w.end(), [&](const QuantityBucket& x) { return q >= x.lo && q <= x.hi; });
    ASSERT_NE(b, w.end()) << q;
    ++observed[static_cast<std::size_t>(b - w.begin())];
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double expected = w[i].p * kDraws;
    chi2 += (observed[i] - expected) * (observed[i] - expected) / expected;
  }
  EXPECT_LT(chi2, 18.475);
}

// ------------------------------------------------------------- noise

TEST(Noise, TypoExamples) {
  const std::set<std::string> allowed = {"elete", "dlete", "deete", "delte", "delee", "delet",  // drop
                                         "edlete", "dleete", "deelte", "deltee", "deleet",     // swap
                                         "ddelete", "deelete", "dellete", "deleete", "delette", "deletee"};
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto t = inject_typo("delete", rng);
    ASSERT_TRUE(t);
    EXPECT_TRUE(allowed.count(*t)) << *t;
  }
  bool saw_delet = false;
  for (int i = 0; i < 2000 && !saw_delet; ++i) saw_delet = *inject_typo("delete", rng) == "delet";
  EXPECT_TRUE(saw_delet);
}

TEST(Noise, TypoHasNothingToTouch) {
  Rng rng(1);
  EXPECT_FALSE(inject_typo("12 34", rng));
  EXPECT_FALSE(inject_typo("two", rng, "two"));
}

TEST(Noise, GreetingIsPrepended) {
  NoiseProfile p;
  p.p_linguistic = p.p_codeswitch = 0.0;
  p.p_contextual = 1.0;
  p.greetings["en"] = {"Hi!"};
  p.emoji["en"] = {"Hi!"};
  p.brands["en"] = {"Hi!"};
  const IntentRecord r{Action::Add, "Beer", 2};
  Rng rng(3);
  bool seen = false;
  for (int i = 0; i < 50; ++i) {
    const auto out = inject_noise("add 2 beers", r, "en", p, rng);
    ASSERT_EQ(out.tags.size(), 1u);
    if (out.tags[0] == NoiseTag::Greeting) {
      EXPECT_EQ(out.text, "Hi! add 2 beers");
      seen = true;
    }
  }
  EXPECT_TRUE(seen);
}

TEST(Noise, EmptyBanksDropTheTag) {
  NoiseProfile p;
  p.p_linguistic = p.p_contextual = p.p_codeswitch = 1.0;
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto out = inject_noise("12 34", {Action::Add, "Beer", 12}, "en", p, rng);
    EXPECT_EQ(out.text, "12 34");
    EXPECT_TRUE(out.tags.empty());
  }
}

TEST(NoiseProperty, QuantityDigitsSurviveEveryInjector) {
  GenerationSpec s = shipped_spec();
  s.noise.p_linguistic = s.noise.p_contextual = s.noise.p_codeswitch = 1.0;
  Rng rng(77);
  for (int i = 0; i < 3000; ++i) {
    const auto& entry = s.catalog[rng.below(s.catalog.size())];
    const std::string lang = s.languages[rng.below(s.languages.size())];
    const std::int64_t q = 1 + static_cast<std::int64_t>(rng.below(50));
    const IntentRecord r{Action::Remove, entry.canonical_name, q};
    const std::string clean = render_utterance("Remove {qty} {product_form}", entry, q, lang);
    const IntentRecord before = r;
    const auto noisy = inject_noise(clean, r, lang, s.noise, rng);
    EXPECT_NE(noisy.text.find(std::to_string(q)), std::string::npos) << noisy.text;
    EXPECT_EQ(r, before);
  }
}

// ------------------------------------------------------------- datasets

TEST(Generate, CleanExamplesMatchTheirRecord) {
  const Dataset ds = generate_dataset(clean_spec(600, 42));
  ASSERT_EQ(ds.examples.size(), 600u);
  for (const Example& ex : ds.examples) {
    EXPECT_TRUE(is_valid(ex.output));
    EXPECT_TRUE(ex.noise_tags.empty());
    EXPECT_NE(ex.input.find(std::to_string(ex.output.quantity)), std::string::npos) << ex.input;
  }
}

TEST(Generate, LanguagesCycle) {
  const Dataset ds = generate_dataset(clean_spec(3000, 42));
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    ++counts[ds.examples[i].language];
    EXPECT_EQ(ds.examples[i].language, shipped_spec().languages[i % 3]);
  }
  EXPECT_EQ(counts, (std::map<std::string, int>{{"en", 1000}, {"es", 1000}, {"hr", 1000}}));
}

TEST(Generate, SameSeedSameBytes) {
  GenerationSpec s = shipped_spec();
  s.n_examples = 500;
  EXPECT_EQ(serialize_jsonl(generate_dataset(s)), serialize_jsonl(generate_dataset(s)));
  GenerationSpec t = s;
  t.seed = 43;
  EXPECT_NE(serialize_jsonl(generate_dataset(s)), serialize_jsonl(generate_dataset(t)));
}

TEST(Generate, NumberWordsReplaceDigits) {
  GenerationSpec s = clean_spec(300, 8);
  s.number_words = true;
  s.number_word_table = load_number_words(testing::data_dir() / "lexicons.json");
  const Dataset ds = generate_dataset(s);
  int worded = 0;
  for (const Example& ex : ds.examples) {
    const auto& table = s.number_word_table.at(ex.language);
    if (const auto it = table.find(ex.output.quantity); it != table.end()) {
      EXPECT_NE(ex.input.find(it->second), std::string::npos) << ex.input;
      ++worded;
    }
  }
  EXPECT_GT(worded, 0);
}

TEST(Generate, InvalidSpecs) {
  GenerationSpec s = clean_spec(10, 1);
  s.languages = {"de"};
  EXPECT_THROW(generate_dataset(s), DatagenError);
  s = clean_spec(10, 1);
  s.noise.p_linguistic = 1.5;
  EXPECT_THROW(generate_dataset(s), DatagenError);
}

TEST(Split, NinetyTen) {
  const Dataset ds = generate_dataset(clean_spec(3000, 42));
  const auto [train, test] = split_dataset(ds, 0.9, 7);
  EXPECT_EQ(train.examples.size(), 2700u);
  EXPECT_EQ(test.examples.size(), 300u);

  Dataset ten;
  ten.examples.assign(ds.examples.begin(), ds.examples.begin() + 10);
  const auto [a, b] = split_dataset(ten, 0.9, 7);
  EXPECT_EQ(a.examples.size(), 9u);
  EXPECT_EQ(b.examples.size(), 1u);
}

TEST(SplitProperty, DisjointUnionIsInput) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) ds.examples.push_back({std::to_string(i), {Action::Add, "X", 1}, "en", {}});
    const double f = 0.01 + 0.98 * rng.uniform01();
    const auto [tr, te] = split_dataset(ds, f, rng.next());
    EXPECT_EQ(tr.examples.size(), static_cast<std::size_t>(std::floor(n * f + 1e-9)));
    std::multiset<std::string> seen;
    for (const auto* part : {&tr, &te})
      for (const auto& ex : part->examples) seen.insert(ex.input);
    EXPECT_EQ(seen.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen.count(std::to_string(i)), 1u);
  }
  Dataset ds;
  EXPECT_THROW(split_dataset(ds, 1.0, 0), DatagenError);
  EXPECT_THROW(split_dataset(ds, 0.0, 0), DatagenError);
}

TEST(Metaprompt, ContainsEveryParameter) {
  MetapromptParams p{"hr", Action::Remove, "Lip Balm", 12, "casual", {NoiseTag::Typo, NoiseTag::Greeting}};
  const std::string m = build_metaprompt(p);
  for (const char* needle : {"Croatian", "remove", "Lip Balm", "12", "casual", "typo", "greeting"}) {
    EXPECT_NE(m.find(needle), std::string::npos) << needle;
  }
}

TEST(Jsonl, RoundTrip) {
  GenerationSpec s = shipped_spec();
  s.n_examples = 400;
  const Dataset ds = generate_dataset(s);
  const Dataset back = parse_jsonl(serialize_jsonl(ds));
  EXPECT_EQ(back.examples, ds.examples);
  EXPECT_EQ(serialize_jsonl(back), serialize_jsonl(ds));
}

TEST(Jsonl, TwoFieldFormAndErrors) {
  const Dataset ds = parse_jsonl(
      R"({"input":"add 2 beers","output":{"action":"add","product":"Beer","quantity":2}})"
      "\n\n");
  ASSERT_EQ(ds.examples.size(), 1u);
  EXPECT_EQ(ds.examples[0].output, (IntentRecord{Action::Add, "Beer", 2}));
  EXPECT_THROW(parse_jsonl("{\"input\":1}\n"), DatagenError);
  EXPECT_THROW(parse_jsonl("not json\n"), DatagenError);
}

TEST(Data, ShippedCatalogCoversEveryLanguage) {
  const auto& s = shipped_spec();
  EXPECT_GE(s.catalog.size(), 20u);
  for (const auto& e : s.catalog)
    for (const auto& lang : s.languages)
      for (std::int64_t q : {1, 2, 3, 5, 12}) EXPECT_NO_THROW(select_surface_form(e, q, lang));
}

}  // namespace
}  // namespace intentkit
