#include "dualoop/cli/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

namespace dualoop::cli {

std::string to_string(Setting s) { return s == Setting::Large ? "large" : "small"; }

Setting parse_setting(std::string_view s) {
  if (s == "large" || s == "Large") return Setting::Large;
  if (s == "small" || s == "Small") return Setting::Small;
  throw ConfigError("setting must be 'large' or 'small', got '" + std::string(s) + "'");
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Binding {
  SchemaEntry entry;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using Cfg = ExperimentConfig;

template <class Field>
Binding size_key(std::string key, std::string help, Field field) {
  return {{key, "int", std::move(help)},
          [key, field](Cfg& c, const std::string& v) { field(c) = static_cast<std::size_t>(to_u64(key, v)); },
          [field](const Cfg& c) { return std::to_string(field(const_cast<Cfg&>(c))); }};
}

template <class Field>
Binding real_key(std::string key, std::string help, Field field) {
  return {{key, "float", std::move(help)},
          [key, field](Cfg& c, const std::string& v) { field(c) = to_double(key, v); },
          [field](const Cfg& c) { return fmt(field(const_cast<Cfg&>(c))); }};
}

template <class Field>
Binding bool_key(std::string key, std::string help, Field field) {
  return {{key, "bool", std::move(help)},
          [key, field](Cfg& c, const std::string& v) { field(c) = to_bool(key, v); },
          [field](const Cfg& c) { return std::string(field(const_cast<Cfg&>(c)) ? "true" : "false"); }};
}

template <class Get, class Parse, class Show>
Binding enum_key(std::string key, std::string choices, std::string help, Get field, Parse parse,
                 Show show) {
  return {{key, choices, std::move(help)},
          [key, field, parse](Cfg& c, const std::string& v) {
            try {
              field(c) = parse(v);
            } catch (const ConfigError&) {
              throw;
            } catch (const std::exception& e) {
              throw ConfigError(key + ": " + e.what());
            }
          },
          [field, show](const Cfg& c) { return show(field(const_cast<Cfg&>(c))); }};
}

void add_optimizer(std::vector<Binding>& b, const std::string& prefix,
                   std::function<OptimizerConfig&(Cfg&)> opt) {
  b.push_back(enum_key(
      prefix + ".optimizer", "adadelta|sgd", "descent rule", [opt](Cfg& c) -> OptimizerKind& { return opt(c).kind; },
      [](const std::string& v) { return parse_optimizer(v); },
      [](OptimizerKind k) { return to_string(k); }));
  b.push_back(real_key(prefix + ".lr", "SGD learning rate", [opt](Cfg& c) -> double& { return opt(c).lr; }));
  b.push_back(real_key(prefix + ".rho", "AdaDelta decay", [opt](Cfg& c) -> double& { return opt(c).rho; }));
  b.push_back(real_key(prefix + ".epsilon", "AdaDelta epsilon", [opt](Cfg& c) -> double& { return opt(c).epsilon; }));
}

void add_mle(std::vector<Binding>& b, const std::string& p, std::function<MleConfig&(Cfg&)> m) {
  b.push_back(size_key(p + ".emb", "embedding size", [m](Cfg& c) -> std::size_t& { return m(c).emb; }));
  b.push_back(size_key(p + ".hid", "GRU hidden size", [m](Cfg& c) -> std::size_t& { return m(c).hid; }));
  b.push_back(size_key(p + ".att", "attention size, 0 = hid", [m](Cfg& c) -> std::size_t& { return m(c).att; }));
  add_optimizer(b, p, [m](Cfg& c) -> OptimizerConfig& { return m(c).optimizer; });
  b.push_back(size_key(p + ".batch", "sentence pairs per update", [m](Cfg& c) -> std::size_t& { return m(c).batch; }));
  b.push_back(size_key(p + ".max_epochs", "epoch limit", [m](Cfg& c) -> std::size_t& { return m(c).max_epochs; }));
  b.push_back(size_key(p + ".patience", "evaluations without improvement before stopping",
                       [m](Cfg& c) -> std::size_t& { return m(c).patience; }));
  b.push_back(size_key(p + ".eval_every", "batches between validations, 0 = per epoch",
                       [m](Cfg& c) -> std::size_t& { return m(c).eval_every; }));
  b.push_back(size_key(p + ".eval_beam", "validation beam width", [m](Cfg& c) -> std::size_t& { return m(c).eval_beam; }));
  b.push_back(size_key(p + ".eval_max_len", "validation decode limit",
                       [m](Cfg& c) -> std::size_t& { return m(c).eval_max_len; }));
  b.push_back(size_key(p + ".max_valid", "validation pairs used, 0 = all",
                       [m](Cfg& c) -> std::size_t& { return m(c).max_valid; }));
  b.push_back(real_key(p + ".grad_clip", "global-norm clip per batch, 0 = off",
                       [m](Cfg& c) -> double& { return m(c).grad_clip; }));
}

std::vector<Binding> make_bindings() {
  std::vector<Binding> b;
  b.push_back(enum_key(
      "setting", "large|small", "warm-start setting", [](Cfg& c) -> Setting& { return c.setting; },
      [](const std::string& v) { return parse_setting(v); }, [](Setting s) { return to_string(s); }));
  b.push_back({{"seed", "int", "master seed"},
               [](Cfg& c, const std::string& v) { c.seed = to_u64("seed", v); },
               [](const Cfg& c) { return std::to_string(c.seed); }});

  b.push_back(size_key("data.vocab_size", "content tokens per language", [](Cfg& c) -> std::size_t& { return c.data.vocab_size; }));
  b.push_back({{"data.bijection_seed", "int", "seed of the token bijection"},
               [](Cfg& c, const std::string& v) { c.data.bijection_seed = to_u64("data.bijection_seed", v); },
               [](const Cfg& c) { return std::to_string(c.data.bijection_seed); }});
  b.push_back(enum_key(
      "data.reordering", "reverse|rotate|swap-adjacent", "word-order rule",
      [](Cfg& c) -> Reordering& { return c.data.reordering; },
      [](const std::string& v) { return parse_reordering(v); }, [](Reordering r) { return to_string(r); }));
  b.push_back(size_key("data.rotate_k", "rotation amount", [](Cfg& c) -> std::size_t& { return c.data.rotate_k; }));
  b.push_back(real_key("data.noise_rate", "per-token corruption rate of B text", [](Cfg& c) -> double& { return c.data.noise_rate; }));
  b.push_back(size_key("data.min_len", "shortest sentence", [](Cfg& c) -> std::size_t& { return c.data.min_len; }));
  b.push_back(size_key("data.max_len", "longest sentence", [](Cfg& c) -> std::size_t& { return c.data.max_len; }));
  b.push_back(real_key("data.geometric_p", "length distribution parameter", [](Cfg& c) -> double& { return c.data.geometric_p; }));
  b.push_back(size_key("data.n_bilingual", "bilingual training pairs", [](Cfg& c) -> std::size_t& { return c.data.n_bilingual; }));
  b.push_back(size_key("data.n_mono_a", "monolingual A sentences", [](Cfg& c) -> std::size_t& { return c.data.n_mono_a; }));
  b.push_back(size_key("data.n_mono_b", "monolingual B sentences", [](Cfg& c) -> std::size_t& { return c.data.n_mono_b; }));
  b.push_back(size_key("data.n_valid", "validation pairs", [](Cfg& c) -> std::size_t& { return c.data.n_valid; }));
  b.push_back(size_key("data.n_test", "test pairs", [](Cfg& c) -> std::size_t& { return c.data.n_test; }));
  b.push_back(size_key("data.successors", "successors per token in the source chain",
                       [](Cfg& c) -> std::size_t& { return c.data.successors; }));
  b.push_back(size_key("data.context_classes", "context classes of the source chain",
                       [](Cfg& c) -> std::size_t& { return c.data.context_classes; }));
  b.push_back(real_key("data.bilingual_fraction", "share of bilingual pairs used for warm start",
                       [](Cfg& c) -> double& { return c.bilingual_fraction; }));

  b.push_back(size_key("lm.emb", "embedding size", [](Cfg& c) -> std::size_t& { return c.lm.emb; }));
  b.push_back(size_key("lm.hid", "GRU hidden size", [](Cfg& c) -> std::size_t& { return c.lm.hid; }));
  add_optimizer(b, "lm", [](Cfg& c) -> OptimizerConfig& { return c.lm.optimizer; });
  b.push_back(size_key("lm.batch", "sentences per update", [](Cfg& c) -> std::size_t& { return c.lm.batch; }));
  b.push_back(size_key("lm.max_epochs", "epoch limit", [](Cfg& c) -> std::size_t& { return c.lm.max_epochs; }));
  b.push_back(size_key("lm.patience", "epochs without improvement before stopping",
                       [](Cfg& c) -> std::size_t& { return c.lm.patience; }));
  b.push_back(real_key("lm.valid_fraction", "held-out share of the monolingual corpus",
                       [](Cfg& c) -> double& { return c.lm.valid_fraction; }));
  b.push_back(size_key("lm.max_valid", "held-out sentences cap", [](Cfg& c) -> std::size_t& { return c.lm.max_valid; }));

  add_mle(b, "nmt", [](Cfg& c) -> MleConfig& { return c.nmt; });

  b.push_back(enum_key(
      "pseudo.orientation", "back|forward", "which side of the pseudo pair is synthetic",
      [](Cfg& c) -> PseudoOrientation& { return c.pseudo.orientation; },
      [](const std::string& v) { return parse_pseudo_orientation(v); },
      [](PseudoOrientation o) { return to_string(o); }));
  b.push_back(size_key("pseudo.beam", "beam width for generating pseudo pairs", [](Cfg& c) -> std::size_t& { return c.pseudo.beam; }));
  b.push_back(size_key("pseudo.max_len", "longest generated sentence kept", [](Cfg& c) -> std::size_t& { return c.pseudo.max_len; }));
  b.push_back(size_key("pseudo.max_sentences", "monolingual sentences translated, 0 = all",
                       [](Cfg& c) -> std::size_t& { return c.pseudo.max_sentences; }));
  add_mle(b, "pseudo", [](Cfg& c) -> MleConfig& { return c.pseudo.mle; });

  b.push_back(real_key("dual.alpha", "weight of the language-model reward", [](Cfg& c) -> double& { return c.dual.alpha; }));
  b.push_back(size_key("dual.K", "middle translations per sentence", [](Cfg& c) -> std::size_t& { return c.dual.K; }));
  b.push_back(real_key("dual.gamma1", "forward learning rate", [](Cfg& c) -> double& { return c.dual.gamma1.base; }));
  b.push_back(real_key("dual.gamma1_decay", "gamma1 / (1 + decay * t)", [](Cfg& c) -> double& { return c.dual.gamma1.decay; }));
  b.push_back(real_key("dual.gamma2", "backward learning rate", [](Cfg& c) -> double& { return c.dual.gamma2.base; }));
  b.push_back(real_key("dual.gamma2_decay", "gamma2 / (1 + decay * t)", [](Cfg& c) -> double& { return c.dual.gamma2.decay; }));
  b.push_back(size_key("dual.max_mid_len", "longest middle translation", [](Cfg& c) -> std::size_t& { return c.dual.max_mid_len; }));
  b.push_back(real_key("dual.initial_mono_fraction", "soft-landing start", [](Cfg& c) -> double& { return c.dual.soft_landing.initial_fraction; }));
  b.push_back(real_key("dual.final_mono_fraction", "soft-landing end", [](Cfg& c) -> double& { return c.dual.soft_landing.final_fraction; }));
  b.push_back(size_key("dual.ramp_steps", "steps of the soft-landing ramp",
                       [](Cfg& c) -> std::size_t& { return c.dual.soft_landing.ramp_steps; }));
  b.push_back(real_key("dual.bilingual_weight", "scale of the bilingual likelihood term",
                       [](Cfg& c) -> double& { return c.dual.soft_landing.bilingual_weight; }));
  b.push_back(real_key("dual.bilingual_lr", "learning rate of the bilingual term, 0 = gamma2",
                       [](Cfg& c) -> double& { return c.dual.bilingual_lr; }));
  b.push_back(real_key("dual.grad_clip", "global-norm clip per gradient, 0 = off", [](Cfg& c) -> double& { return c.dual.grad_clip; }));
  b.push_back(enum_key(
      "dual.estimator", "beam-average|exact-expectation", "policy-gradient estimator",
      [](Cfg& c) -> EstimatorMode& { return c.dual.estimator; },
      [](const std::string& v) { return parse_estimator_mode(v); }, [](EstimatorMode m) { return to_string(m); }));
  b.push_back(bool_key("dual.normalize_lm_reward", "length-normalize the language-model reward",
                       [](Cfg& c) -> bool& { return c.dual.normalize_lm_reward; }));
  b.push_back(bool_key("dual.reward_baseline", "subtract the mean candidate reward",
                       [](Cfg& c) -> bool& { return c.dual.reward_baseline; }));
  b.push_back(bool_key("dual.symmetric", "also play the game starting from B", [](Cfg& c) -> bool& { return c.dual.symmetric; }));
  b.push_back(size_key("dual.batch", "sentences per side per step", [](Cfg& c) -> std::size_t& { return c.dual.batch; }));
  b.push_back(size_key("dual.max_steps", "step limit", [](Cfg& c) -> std::size_t& { return c.dual.max_steps; }));
  b.push_back(size_key("dual.patience", "validations without improvement before stopping",
                       [](Cfg& c) -> std::size_t& { return c.dual.patience; }));
  b.push_back(size_key("dual.eval_every", "steps between validations, 0 = never", [](Cfg& c) -> std::size_t& { return c.dual.eval_every; }));
  b.push_back(size_key("dual.eval_beam", "validation beam width", [](Cfg& c) -> std::size_t& { return c.dual.eval_beam; }));
  b.push_back(size_key("dual.eval_max_len", "validation decode limit", [](Cfg& c) -> std::size_t& { return c.dual.eval_max_len; }));
  b.push_back(size_key("dual.max_valid", "validation pairs used, 0 = all", [](Cfg& c) -> std::size_t& { return c.dual.max_valid; }));
  b.push_back(bool_key("dual.log_rewards", "log every candidate reward", [](Cfg& c) -> bool& { return c.dual.log_rewards; }));

  b.push_back(size_key("eval.beam", "test beam width", [](Cfg& c) -> std::size_t& { return c.eval.beam; }));
  b.push_back(size_key("eval.max_len", "test decode limit", [](Cfg& c) -> std::size_t& { return c.eval.max_len; }));
  b.push_back(bool_key("eval.len_norm", "rank finished hypotheses by mean log-probability",
                       [](Cfg& c) -> bool& { return c.eval.len_norm; }));
  return b;
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> b = make_bindings();
  return b;
}

const Binding* find_binding(const std::string& key) {
  for (const auto& b : bindings()) {
    if (b.entry.key == key) return &b;
  }
  return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    data.validate();
    dual.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(bilingual_fraction > 0.0 && bilingual_fraction <= 1.0)) {
    throw ConfigError("data.bilingual_fraction must be in (0, 1]");
  }
  auto check_mle = [](const std::string& p, const MleConfig& m) {
    if (m.emb < 1 || m.hid < 1) throw ConfigError(p + ": emb and hid must be >= 1");
    if (m.batch < 1) throw ConfigError(p + ".batch must be >= 1");
    if (m.patience < 1) throw ConfigError(p + ".patience must be >= 1");
    if (m.eval_beam < 1 || m.eval_max_len < 1) throw ConfigError(p + ": eval_beam and eval_max_len must be >= 1");
  };
  check_mle("nmt", nmt);
  check_mle("pseudo", pseudo.mle);
  if (pseudo.mle.emb != nmt.emb || pseudo.mle.hid != nmt.hid || pseudo.mle.att != nmt.att) {
    throw ConfigError("pseudo.emb/hid/att must match nmt");
  }
  if (lm.emb < 1 || lm.hid < 1 || lm.batch < 1) throw ConfigError("lm: emb, hid and batch must be >= 1");
  if (!(lm.valid_fraction > 0.0 && lm.valid_fraction < 1.0)) throw ConfigError("lm.valid_fraction must be in (0, 1)");
  if (pseudo.beam < 1 || pseudo.max_len < 1) throw ConfigError("pseudo: beam and max_len must be >= 1");
  if (eval.beam < 1 || eval.max_len < 1) throw ConfigError("eval: beam and max_len must be >= 1");
}

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> s = [] {
    std::vector<SchemaEntry> out;
    for (const auto& b : bindings()) out.push_back(b.entry);
    return out;
  }();
  return s;
}

std::string schema_text() {
  std::size_t wk = 0, wt = 0;
  for (const auto& e : config_schema()) {
    wk = std::max(wk, e.key.size());
    wt = std::max(wt, e.type.size());
  }
  std::ostringstream os;
  for (const auto& e : config_schema()) {
    os << e.key << std::string(wk + 2 - e.key.size(), ' ') << e.type << std::string(wt + 2 - e.type.size(), ' ')
       << e.help << '\n';
  }
  return os.str();
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    out[key] = value;
  }
  return out;
}

ExperimentConfig default_config(Setting setting) {
  ExperimentConfig c;
  c.setting = setting;
  c.bilingual_fraction = setting == Setting::Small ? 0.1 : 1.0;
  return c;
}

void apply_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const Binding* b = find_binding(key);
  if (!b) throw ConfigError("unknown config key: " + key);
  b->set(config, value);
}

ExperimentConfig build_config(const KeyValues& values) {
  std::string unknown;
  for (const auto& [k, v] : values) {
    if (!find_binding(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
  Setting setting = Setting::Small;
  if (auto it = values.find("setting"); it != values.end()) setting = parse_setting(it->second);
  ExperimentConfig c = default_config(setting);
  for (const auto& [k, v] : values) {
    if (k != "setting") apply_value(c, k, v);
  }
  c.validate();
  return c;
}

KeyValues config_to_values(const ExperimentConfig& config) {
  KeyValues out;
  for (const auto& b : bindings()) out[b.entry.key] = b.get(config);
  return out;
}

std::string config_to_text(const ExperimentConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& b : bindings()) {
    const std::string& key = b.entry.key;
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << name << " = " << b.get(config) << '\n';
  }
  return os.str();
}

}  // namespace dualoop::cli
