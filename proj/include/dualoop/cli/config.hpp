#pragma once

#include "dualoop/baselines/mle.hpp"
#include "dualoop/baselines/pseudo.hpp"
#include "dualoop/corpus/synth.hpp"
#include "dualoop/duallearn/trainer.hpp"
#include "dualoop/langmodel/lm.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualoop::cli {

/// Bad config text, unknown keys or out-of-range values. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Setting { Large, Small };

std::string to_string(Setting s);
Setting parse_setting(std::string_view s);

struct PseudoConfig {
  PseudoOrientation orientation = PseudoOrientation::BackTranslation;
  std::size_t beam = 2;
  std::size_t max_len = 50;
  /// Monolingual sentences translated per direction; 0 means all.
  std::size_t max_sentences = 0;
  MleConfig mle;
};

struct EvalConfig {
  std::size_t beam = 12;
  std::size_t max_len = 50;
  bool len_norm = false;
};

struct ExperimentConfig {
  Setting setting = Setting::Small;
  std::uint64_t seed = 1;
  SynthLangSpec data;
  /// Share of the bilingual corpus used for warm start; defaults by setting.
  double bilingual_fraction = 0.1;
  LmTrainConfig lm;
  MleConfig nmt;
  PseudoConfig pseudo;
  DualConfig dual;
  EvalConfig eval;

  void validate() const;
};

/// One documented config key.
struct SchemaEntry {
  std::string key;
  std::string type;
  std::string help;
};

const std::vector<SchemaEntry>& config_schema();
/// Schema as text, one `key  type  help` line per key.
std::string schema_text();

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines. `[section]` headers prefix later keys with
/// `section.`; `#` starts a comment; values may be double-quoted.
KeyValues parse_key_values(const std::string& text);

/// Defaults for a setting before any overrides.
ExperimentConfig default_config(Setting setting);

/// Applies overrides in key order. `setting` is applied first so the other
/// keys refine the setting's defaults. Unknown keys raise one ConfigError
/// listing all of them.
ExperimentConfig build_config(const KeyValues& values);

void apply_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Every key with its resolved value, grouped by section.
std::string config_to_text(const ExperimentConfig& config);
KeyValues config_to_values(const ExperimentConfig& config);

}  // namespace dualoop::cli
