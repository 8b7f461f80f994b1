#pragma once

#include "dualoop/cli/config.hpp"
#include "dualoop/cli/report.hpp"
#include "dualoop/cli/run_dir.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dualoop::cli {

/// An open run directory with its archived config and logs.
class Run {
 public:
  /// Archives `config` into `dir`, or checks it against an existing archive.
  Run(const fs::path& dir, const ExperimentConfig& config, const std::string& input_text);

  [[nodiscard]] const RunDir& dir() const { return dir_; }
  [[nodiscard]] const ExperimentConfig& config() const { return config_; }
  MetricsLog& metrics() { return metrics_; }
  TimingLog& timing() { return timing_; }

 private:
  RunDir dir_;
  ExperimentConfig config_;
  MetricsLog metrics_;
  TimingLog timing_;
};

/// Resolves the config of a run: the archived config.toml when the
/// directory already has one, else the setting's defaults, then the config
/// file, then `overrides` in order. A config that contradicts an existing
/// archive is an error.
struct ResolvedConfig {
  ExperimentConfig config;
  std::string input_text;
};
ResolvedConfig resolve_config(const fs::path& out_dir, const std::optional<fs::path>& config_file,
                              const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed);

void stage_gen_data(Run& run);
void stage_train_lm(Run& run);
void stage_train_nmt(Run& run);
void stage_train_pseudo(Run& run);
void stage_train_dual(Run& run);
/// The only stage that reads the test split.
EvalSummary stage_evaluate(Run& run);

struct GradCheckSummary {
  std::string name;
  std::size_t seeds = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;
};

/// Finite-difference checks on seeded tiny models for the seq2seq
/// log-likelihood, the LM log-likelihood and the MLE batch objective.
std::vector<GradCheckSummary> run_grad_checks(std::size_t seeds, std::uint64_t base_seed, double tol);

struct ReproResult {
  EvalSummary small;
  EvalSummary large;
  std::vector<TrendCheck> trends;
  double seconds = 0.0;
  [[nodiscard]] bool all_pass() const;
};

/// The Small and Large pipelines under `out/small` and `out/large`, then
/// the comparison report and trend checks under `out`. `base` supplies
/// everything but the setting and bilingual fraction.
ReproResult repro_small(const fs::path& out, const ExperimentConfig& base, const std::string& input_text);

}  // namespace dualoop::cli
