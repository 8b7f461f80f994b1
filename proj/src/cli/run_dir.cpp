#include "dualoop/cli/run_dir.hpp"

#include "dualoop/corpus/corpus.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <sstream>

namespace dualoop::cli {

MissingInput::MissingInput(const fs::path& p)
    : std::runtime_error("missing input: " + p.string()), path(p) {}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

RunDir::RunDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

const fs::path& RunDir::require(const fs::path& p) {
  if (fs::exists(p)) return p;
  fs::path meta = p;
  meta += ".meta";
  if (fs::exists(meta)) return p;
  throw MissingInput(p);
}

std::string RunDir::run_id() const {
  const std::string text = read_file(require(path("config.toml")));
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunDir::archive_config(const ExperimentConfig& config, const std::string& input_text) const {
  write_text("config.toml", config_to_text(config));
  write_text("config.input", input_text);
  write_text("seed", std::to_string(config.seed) + "\n");
}

ExperimentConfig RunDir::load_config() const {
  return build_config(parse_key_values(read_file(require(path("config.toml")))));
}

void RunDir::write_text(const std::string& name, const std::string& text) const { write_file(path(name), text); }

std::string RunDir::read_text(const std::string& name) const { return read_file(require(path(name))); }

MetricsLog::MetricsLog(fs::path path, std::string run_id) : path_(std::move(path)), run_id_(std::move(run_id)) {
  if (fs::exists(path_)) {
    for (const auto& r : read_metrics(path_)) last_step_[r.metric] = r.step;
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open " + path_.string());
}

void MetricsLog::record(const std::string& metric, std::size_t step, double value) {
  if (auto it = last_step_.find(metric); it != last_step_.end() && step < it->second) {
    throw std::runtime_error("metrics: step of '" + metric + "' went back from " + std::to_string(it->second) +
                             " to " + std::to_string(step) + "; use a fresh run directory");
  }
  last_step_[metric] = step;
  nlohmann::ordered_json j;
  j["run"] = run_id_;
  j["step"] = step;
  j["metric"] = metric;
  j["value"] = value;
  out_ << j.dump() << '\n';
  out_.flush();
}

std::vector<MetricRecord> read_metrics(const fs::path& path) {
  std::vector<MetricRecord> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out.push_back({j.at("run").get<std::string>(), j.at("step").get<std::size_t>(),
                   j.at("metric").get<std::string>(), j.at("value").get<double>()});
  }
  return out;
}

TimingLog::TimingLog(fs::path path, std::string run_id) : path_(std::move(path)), run_id_(std::move(run_id)) {}

void TimingLog::record(const std::string& stage, double seconds) {
  nlohmann::ordered_json j;
  j["run"] = run_id_;
  j["stage"] = stage;
  j["seconds"] = seconds;
  j["wall_clock"] = std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  std::ofstream out(path_, std::ios::app);
  out << j.dump() << '\n';
}

namespace {

std::vector<std::string> decode_all(const Vocabulary& v, const std::vector<Sentence>& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(decode(v, x));
  return out;
}

std::vector<Sentence> load_sentences(const fs::path& p, const Vocabulary& v) {
  std::vector<Sentence> out;
  for (const auto& line : read_lines(RunDir::require(p))) out.push_back(encode(v, line));
  return out;
}

}  // namespace

void save_bilingual(const RunDir& run, const std::string& stem, const BilingualCorpus& c, const Vocabulary& a,
                    const Vocabulary& b) {
  std::vector<std::string> src, tgt;
  for (const auto& p : c.pairs) {
    src.push_back(decode(a, p.source));
    tgt.push_back(decode(b, p.target));
  }
  write_lines(run.data(stem + ".a"), src);
  write_lines(run.data(stem + ".b"), tgt);
}

BilingualCorpus load_bilingual(const RunDir& run, const std::string& stem, const Vocabulary& a, const Vocabulary& b) {
  auto src = load_sentences(run.data(stem + ".a"), a);
  auto tgt = load_sentences(run.data(stem + ".b"), b);
  if (src.size() != tgt.size()) throw std::runtime_error("data/" + stem + ": sides differ in length");
  BilingualCorpus out;
  for (std::size_t i = 0; i < src.size(); ++i) out.pairs.push_back({std::move(src[i]), std::move(tgt[i])});
  return out;
}

void save_synth_data(const RunDir& run, const SynthData& d, const SynthLangSpec& spec) {
  fs::create_directories(run.path("data"));
  save_vocab(run.data("vocab.a"), d.vocab_a);
  save_vocab(run.data("vocab.b"), d.vocab_b);
  save_bilingual(run, "train", d.train, d.vocab_a, d.vocab_b);
  save_bilingual(run, "valid", d.valid, d.vocab_a, d.vocab_b);
  save_bilingual(run, "test", d.test, d.vocab_a, d.vocab_b);
  write_lines(run.data("mono.a"), decode_all(d.vocab_a, d.mono_a.sentences));
  write_lines(run.data("mono.b"), decode_all(d.vocab_b, d.mono_b.sentences));
  write_file(run.data("spec.txt"), spec_to_text(spec));
}

LoadedData load_training_data(const RunDir& run) {
  LoadedData d;
  d.vocab_a = load_vocab(RunDir::require(run.data("vocab.a")));
  d.vocab_b = load_vocab(RunDir::require(run.data("vocab.b")));
  d.train = load_bilingual(run, "train", d.vocab_a, d.vocab_b);
  d.valid = load_bilingual(run, "valid", d.vocab_a, d.vocab_b);
  d.mono_a = {"A", load_sentences(run.data("mono.a"), d.vocab_a)};
  d.mono_b = {"B", load_sentences(run.data("mono.b"), d.vocab_b)};
  return d;
}

BilingualCorpus load_test_data(const RunDir& run, const Vocabulary& a, const Vocabulary& b) {
  return load_bilingual(run, "test", a, b);
}

}  // namespace dualoop::cli
