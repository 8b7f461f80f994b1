#pragma once

#include "dualoop/cli/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dualoop::cli {

/// Test-set scores of one system. Directions are A→B and B→A; loops are
/// A→B→A and B→A→B.
struct SystemEval {
  std::string system;  // nmt, pseudo or dual
  std::optional<double> bleu_ab;
  std::optional<double> bleu_ba;
  std::optional<double> recon_aba;
  std::optional<double> recon_bab;
};

struct EvalSummary {
  std::string run_id;
  Setting setting = Setting::Small;
  std::vector<SystemEval> systems;

  [[nodiscard]] const SystemEval* find(const std::string& system) const;
};

nlohmann::ordered_json to_json(const EvalSummary& e);
EvalSummary eval_from_json(const nlohmann::json& j);

/// One row of the comparison table.
struct CompareRow {
  std::string run;
  std::string setting;
  std::string system;
  std::optional<double> bleu_ab;
  std::optional<double> bleu_ba;
  std::optional<double> recon_aba;
  std::optional<double> recon_bab;
};

/// Rows for the systems of each run, in run order then nmt, pseudo, dual.
/// A run without eval.json contributes one row per trained system with
/// every score missing.
std::vector<CompareRow> compare_rows(const std::vector<std::filesystem::path>& runs);
std::vector<CompareRow> compare_rows(const EvalSummary& e, const std::string& run);

/// Missing cells render as "—" in Markdown and empty in CSV.
std::string compare_markdown(const std::vector<CompareRow>& rows);
std::string compare_csv(const std::vector<CompareRow>& rows);
nlohmann::ordered_json compare_json(const std::vector<CompareRow>& rows);

struct TrendCheck {
  std::string name;
  std::string description;
  double value = 0.0;      // NaN when an input is missing
  double threshold = 0.0;  // pass iff value >= threshold (or > for strict)
  bool strict = false;
  bool pass = false;
};

inline constexpr double kMinDualGain = 2.0;
inline constexpr double kMinReconGain = 5.0;

/// Directional checks on the Small and Large evaluations.
std::vector<TrendCheck> trend_checks(const EvalSummary& small, const EvalSummary& large);
std::string trends_markdown(const std::vector<TrendCheck>& checks);
nlohmann::ordered_json to_json(const std::vector<TrendCheck>& checks);

}  // namespace dualoop::cli
