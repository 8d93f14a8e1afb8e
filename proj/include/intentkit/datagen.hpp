#pragma once

// Seedable generator for the synthetic multilingual cart-intent dataset.
//
// A generated example is fully determined by (GenerationSpec, seed): the
// language cycles through `languages`, while action, catalog entry, quantity,
// template and noise come from one sequential RNG stream. Nothing here talks
// to a model; build_metaprompt only produces text for a backend to consume.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intentkit/intent.hpp"
#include "intentkit/rng.hpp"

namespace intentkit {

class DatagenError : public std::runtime_error {
 public:
  enum class Kind { InvalidSpec, UnknownPlaceholder, MissingSurfaceForm, InvalidWeights, InvalidData };

  DatagenError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct SurfaceForms {
  std::string singular;
  std::string paucal;  // Croatian 2-4; empty elsewhere
  std::string plural;
};

struct CatalogEntry {
  std::string canonical_name;
  std::map<std::string, SurfaceForms> forms;  // language code -> forms
};

// Quantities in [lo, hi] share probability `p` uniformly.
struct QuantityBucket {
  std::int64_t lo = 1;
  std::int64_t hi = 1;
  double p = 0.0;
};
using QuantityWeights = std::vector<QuantityBucket>;

QuantityWeights default_quantity_weights();
void validate_weights(const QuantityWeights& weights);

enum class NoiseTag { Typo, Slang, Greeting, Emoji, Brand, Codeswitch };
std::string_view to_string(NoiseTag t);
std::optional<NoiseTag> parse_noise_tag(std::string_view s);

using TextBank = std::map<std::string, std::vector<std::string>>;  // language -> entries

struct NoiseProfile {
  double p_linguistic = 0.25;
  double p_contextual = 0.20;
  double p_codeswitch = 0.10;
  TextBank slang;
  TextBank greetings;
  TextBank emoji;
  TextBank brands;
  TextBank codeswitch_phrases;

  bool is_noise_free() const {
    return p_linguistic == 0.0 && p_contextual == 0.0 && p_codeswitch == 0.0;
  }
};

struct UtteranceTemplate {
  std::string text;
  std::string style;
};

struct TemplateBank {
  // language -> action -> templates
  std::map<std::string, std::map<Action, std::vector<UtteranceTemplate>>> by_language;
};

// language -> quantity -> word; used only when number-word rendering is on.
using NumberWordTable = std::map<std::string, std::map<std::int64_t, std::string>>;

struct GenerationSpec {
  std::size_t n_examples = 0;
  std::vector<std::string> languages{"en", "hr", "es"};
  std::vector<CatalogEntry> catalog;
  QuantityWeights quantity_weights = default_quantity_weights();
  NoiseProfile noise;
  TemplateBank templates;
  bool number_words = false;
  NumberWordTable number_word_table;
  std::uint64_t seed = 42;
};

void validate_spec(const GenerationSpec& spec);
std::string spec_fingerprint(const GenerationSpec& spec);

struct Example {
  std::string input;
  IntentRecord output;
  std::string language;
  std::vector<NoiseTag> noise_tags;

  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::string spec_fingerprint;
  std::uint64_t seed = 0;
};

Dataset generate_dataset(const GenerationSpec& spec);

// Substitutes {qty}, {product} (canonical name) and {product_form} (surface
// form chosen by the language's plurality rule). `quantity_text` overrides the
// digits rendered for {qty}.
std::string render_utterance(std::string_view tmpl, const CatalogEntry& entry,
                             std::int64_t quantity, std::string_view language,
                             std::optional<std::string_view> quantity_text = std::nullopt);

// The surface form used for `quantity` items in `language`.
std::string select_surface_form(const CatalogEntry& entry, std::int64_t quantity,
                                std::string_view language);

std::int64_t sample_quantity(Rng& rng, const QuantityWeights& weights);

struct NoisyUtterance {
  std::string text;
  std::vector<NoiseTag> tags;
};

// Applies the linguistic, code-switch and contextual injectors independently.
// The quantity digits (and `protected_word`, when number words are rendered)
// are never modified.
NoisyUtterance inject_noise(std::string_view utterance, const IntentRecord& record,
                            std::string_view language, const NoiseProfile& profile, Rng& rng,
                            std::optional<std::string_view> protected_word = std::nullopt);

// Single typo (drop, swap or duplicate one character) in a random unprotected
// alphabetic run. Returns nullopt if no run is eligible.
std::optional<std::string> inject_typo(std::string_view utterance, Rng& rng,
                                       std::optional<std::string_view> protected_word = std::nullopt);

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed);

struct MetapromptParams {
  std::string language;
  Action action = Action::Add;
  std::string product;
  std::int64_t quantity = 1;
  std::string style;
  std::vector<NoiseTag> noise_directives;
};

std::string language_name(std::string_view code);
std::string build_metaprompt(const MetapromptParams& params);

// JSON Lines dataset format.
std::string to_jsonl_line(const Example& ex);
std::string serialize_jsonl(const Dataset& ds);
// Accepts both the full form and the two-field {"input","output"} form.
Dataset parse_jsonl(std::string_view document);
Dataset load_jsonl(const std::filesystem::path& path);

// Data-file loaders (JSON files under the data directory).
std::vector<CatalogEntry> load_catalog(const std::filesystem::path& path);
TemplateBank load_templates(const std::filesystem::path& path);
NoiseProfile load_noise_banks(const std::filesystem::path& path);
NumberWordTable load_number_words(const std::filesystem::path& lexicon_path);

// Spec populated from <data_dir>/{catalog,templates,noise,lexicons}.json.
GenerationSpec default_generation_spec(const std::filesystem::path& data_dir);

}  // namespace intentkit
