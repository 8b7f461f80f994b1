#pragma once

#include "dualoop/cli/config.hpp"
#include "dualoop/corpus/synth.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

namespace dualoop::cli {

namespace fs = std::filesystem;

/// A required input is absent. Maps to exit code 1.
class MissingInput : public std::runtime_error {
 public:
  explicit MissingInput(const fs::path& path);
  fs::path path;
};

/// Layout of one run directory:
///   config.toml       resolved config, every key
///   config.input      the config file and --set overrides as given
///   seed              the master seed
///   data/             vocabularies, corpora and the synthetic spec
///   lm.a, lm.b        language models
///   nmt.ab, nmt.ba    warm-start models
///   pseudo.ab, ...    back-translation baselines
///   dual.ab.<step>    dual checkpoints; `dual.best` names the selected step
///   metrics.jsonl     deterministic metric records
///   timing.jsonl      wall-clock per stage
///   eval.json, report.{md,csv,json}, buckets.*.csv
class RunDir {
 public:
  explicit RunDir(fs::path root);

  [[nodiscard]] const fs::path& root() const { return root_; }
  [[nodiscard]] fs::path path(const std::string& name) const { return root_ / name; }
  [[nodiscard]] fs::path data(const std::string& name) const { return root_ / "data" / name; }
  /// Throws MissingInput unless `p` (or `p.meta` for checkpoints) exists.
  static const fs::path& require(const fs::path& p);

  /// Stable id derived from the resolved config text.
  [[nodiscard]] std::string run_id() const;

  void archive_config(const ExperimentConfig& config, const std::string& input_text) const;
  [[nodiscard]] ExperimentConfig load_config() const;

  void write_text(const std::string& name, const std::string& text) const;
  [[nodiscard]] std::string read_text(const std::string& name) const;

 private:
  fs::path root_;
};

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& text);

/// Append-only JSONL metric log. Each record carries run id, step, metric
/// name and value; steps must not decrease per metric. Wall-clock is kept
/// out of this file so reruns compare byte for byte.
class MetricsLog {
 public:
  MetricsLog(fs::path path, std::string run_id);

  void record(const std::string& metric, std::size_t step, double value);
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::string run_id_;
  std::map<std::string, std::size_t> last_step_;
  std::ofstream out_;
};

struct MetricRecord {
  std::string run;
  std::size_t step = 0;
  std::string metric;
  double value = 0.0;
};

std::vector<MetricRecord> read_metrics(const fs::path& path);

/// Stage timings, one JSONL record per stage with elapsed and wall-clock
/// seconds since the epoch.
class TimingLog {
 public:
  TimingLog(fs::path path, std::string run_id);
  void record(const std::string& stage, double seconds);

 private:
  fs::path path_;
  std::string run_id_;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Corpora of a run on disk, one sentence of token strings per line.
void save_synth_data(const RunDir& run, const SynthData& data, const SynthLangSpec& spec);

/// `data/<stem>.a` and `data/<stem>.b`, line-aligned.
void save_bilingual(const RunDir& run, const std::string& stem, const BilingualCorpus& corpus, const Vocabulary& a,
                    const Vocabulary& b);
BilingualCorpus load_bilingual(const RunDir& run, const std::string& stem, const Vocabulary& a, const Vocabulary& b);

struct LoadedData {
  Vocabulary vocab_a;
  Vocabulary vocab_b;
  BilingualCorpus train;
  MonolingualCorpus mono_a;
  MonolingualCorpus mono_b;
  BilingualCorpus valid;
};

/// Everything except the test split.
LoadedData load_training_data(const RunDir& run);
/// The test split; only the evaluate stage calls this.
BilingualCorpus load_test_data(const RunDir& run, const Vocabulary& a, const Vocabulary& b);

}  // namespace dualoop::cli
