#include "dualoop/cli/report.hpp"

#include "dualoop/cli/run_dir.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dualoop::cli {

namespace {

const char* const kSystems[] = {"nmt", "pseudo", "dual"};
constexpr const char* kGap = "—";

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string cell(const std::optional<double>& v, const char* gap) {
  if (!v) return gap;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

std::string system_label(const std::string& s) {
  if (s == "nmt") return "NMT";
  if (s == "pseudo") return "pseudo-NMT";
  if (s == "dual") return "dual-NMT";
  return s;
}

bool has_checkpoint(const fs::path& run, const std::string& system) {
  if (system == "dual") return fs::exists(run / "dual.best");
  fs::path meta = run / (system + ".ab.meta");
  return fs::exists(meta);
}

}  // namespace

const SystemEval* EvalSummary::find(const std::string& system) const {
  for (const auto& s : systems) {
    if (s.system == system) return &s;
  }
  return nullptr;
}

nlohmann::ordered_json to_json(const EvalSummary& e) {
  nlohmann::ordered_json j;
  j["run"] = e.run_id;
  j["setting"] = to_string(e.setting);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : e.systems) {
    arr.push_back({{"system", s.system},
                   {"bleu_ab", opt_json(s.bleu_ab)},
                   {"bleu_ba", opt_json(s.bleu_ba)},
                   {"recon_aba", opt_json(s.recon_aba)},
                   {"recon_bab", opt_json(s.recon_bab)}});
  }
  j["systems"] = arr;
  return j;
}

EvalSummary eval_from_json(const nlohmann::json& j) {
  EvalSummary e;
  e.run_id = j.at("run").get<std::string>();
  e.setting = parse_setting(j.at("setting").get<std::string>());
  for (const auto& s : j.at("systems")) {
    e.systems.push_back({s.at("system").get<std::string>(), opt_from(s, "bleu_ab"), opt_from(s, "bleu_ba"),
                         opt_from(s, "recon_aba"), opt_from(s, "recon_bab")});
  }
  return e;
}

std::vector<CompareRow> compare_rows(const EvalSummary& e, const std::string& run) {
  std::vector<CompareRow> rows;
  for (const char* name : kSystems) {
    if (const SystemEval* s = e.find(name)) {
      rows.push_back({run, to_string(e.setting), name, s->bleu_ab, s->bleu_ba, s->recon_aba, s->recon_bab});
    }
  }
  return rows;
}

std::vector<CompareRow> compare_rows(const std::vector<fs::path>& runs) {
  std::vector<CompareRow> rows;
  for (const auto& run : runs) {
    if (!fs::is_directory(run)) throw MissingInput(run);
    const std::string name = run.filename().empty() ? run.parent_path().filename().string() : run.filename().string();
    if (fs::exists(run / "eval.json")) {
      auto more = compare_rows(eval_from_json(nlohmann::json::parse(read_file(run / "eval.json"))), name);
      rows.insert(rows.end(), more.begin(), more.end());
      continue;
    }
    std::string setting = kGap;
    if (fs::exists(run / "config.toml")) {
      setting = to_string(build_config(parse_key_values(read_file(run / "config.toml"))).setting);
    }
    bool any = false;
    for (const char* sys : kSystems) {
      if (has_checkpoint(run, sys)) {
        rows.push_back({name, setting, sys, {}, {}, {}, {}});
        any = true;
      }
    }
    if (!any) rows.push_back({name, setting, kGap, {}, {}, {}, {}});
  }
  return rows;
}

std::string compare_markdown(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << "| Run | Setting | System | BLEU A→B | BLEU B→A | Recon A→B→A | Recon B→A→B |\n"
     << "|---|---|---|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    os << "| " << r.run << " | " << r.setting << " | " << system_label(r.system) << " | " << cell(r.bleu_ab, kGap)
       << " | " << cell(r.bleu_ba, kGap) << " | " << cell(r.recon_aba, kGap) << " | " << cell(r.recon_bab, kGap)
       << " |\n";
  }
  return os.str();
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << "run,setting,system,bleu_ab,bleu_ba,recon_aba,recon_bab\n";
  for (const auto& r : rows) {
    os << r.run << ',' << r.setting << ',' << r.system << ',' << cell(r.bleu_ab, "") << ',' << cell(r.bleu_ba, "")
       << ',' << cell(r.recon_aba, "") << ',' << cell(r.recon_bab, "") << '\n';
  }
  return os.str();
}

nlohmann::ordered_json compare_json(const std::vector<CompareRow>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"run", r.run},
                   {"setting", r.setting},
                   {"system", r.system},
                   {"bleu_ab", opt_json(r.bleu_ab)},
                   {"bleu_ba", opt_json(r.bleu_ba)},
                   {"recon_aba", opt_json(r.recon_aba)},
                   {"recon_bab", opt_json(r.recon_bab)}});
  }
  return arr;
}

std::vector<TrendCheck> trend_checks(const EvalSummary& small, const EvalSummary& large) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  auto get = [](const EvalSummary& e, const char* sys, std::optional<double> SystemEval::*field) {
    const SystemEval* s = e.find(sys);
    return s && (s->*field) ? *(s->*field) : nan;
  };
  std::vector<TrendCheck> out;
  auto add = [&](std::string name, std::string desc, double value, double threshold, bool strict) {
    const bool pass = std::isfinite(value) && (strict ? value > threshold : value >= threshold);
    out.push_back({std::move(name), std::move(desc), value, threshold, strict, pass});
  };
  struct Dir {
    const char* tag;
    std::optional<double> SystemEval::*bleu;
    std::optional<double> SystemEval::*recon;
    const char* loop;
  };
  const Dir dirs[] = {{"A→B", &SystemEval::bleu_ab, &SystemEval::recon_aba, "A→B→A"},
                      {"B→A", &SystemEval::bleu_ba, &SystemEval::recon_bab, "B→A→B"}};
  for (const auto& d : dirs) {
    add(std::string("dual_gain ") + d.tag, "small: dual-NMT minus NMT test BLEU",
        get(small, "dual", d.bleu) - get(small, "nmt", d.bleu), kMinDualGain, false);
  }
  for (const auto& d : dirs) {
    add(std::string("dual_vs_pseudo ") + d.tag, "small: dual-NMT minus pseudo-NMT test BLEU",
        get(small, "dual", d.bleu) - get(small, "pseudo", d.bleu), 0.0, false);
  }
  for (const auto& d : dirs) {
    add(std::string("recon_gain ") + d.loop, "small: reconstruction BLEU after dual training minus warm start",
        get(small, "dual", d.recon) - get(small, "nmt", d.recon), kMinReconGain, false);
  }
  for (const auto& d : dirs) {
    const double gs = get(small, "dual", d.bleu) - get(small, "nmt", d.bleu);
    const double gl = get(large, "dual", d.bleu) - get(large, "nmt", d.bleu);
    add(std::string("small_gain_exceeds_large ") + d.tag, "small dual gain minus large dual gain", gs - gl, 0.0,
        true);
  }
  return out;
}

std::string trends_markdown(const std::vector<TrendCheck>& checks) {
  std::ostringstream os;
  os << "| Check | Value | Needs | Result |\n|---|---:|---:|---|\n";
  for (const auto& c : checks) {
    os << "| " << c.name << " | " << cell(std::isfinite(c.value) ? std::optional<double>(c.value) : std::nullopt, kGap)
       << " | " << (c.strict ? "> " : ">= ") << cell(c.threshold, kGap) << " | " << (c.pass ? "PASS" : "FAIL")
       << " |\n";
  }
  return os.str();
}

nlohmann::ordered_json to_json(const std::vector<TrendCheck>& checks) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"description", c.description},
                   {"value", std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nlohmann::ordered_json(nullptr)},
                   {"threshold", c.threshold},
                   {"strict", c.strict},
                   {"pass", c.pass}});
  }
  return arr;
}

}  // namespace dualoop::cli
