#include "dualoop/cli/pipeline.hpp"

#include "dualoop/evalkit/bleu.hpp"
#include "dualoop/evalkit/translate.hpp"
#include "dualoop/numerics/grad_check.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace dualoop::cli {

namespace {

std::string resolved_diff(const KeyValues& a, const KeyValues& b) {
  std::string out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) out += (out.empty() ? "" : ", ") + k;
  }
  return out;
}

Rng stage_rng(const ExperimentConfig& c, std::string_view name) { return Rng(c.seed).split(name); }

}  // namespace

ResolvedConfig resolve_config(const fs::path& out_dir, const std::optional<fs::path>& config_file,
                              const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
  KeyValues kv;
  std::string input;
  const fs::path archived = out_dir / "config.toml";
  const bool have_archive = fs::exists(archived);
  if (have_archive) kv = parse_key_values(read_file(archived));
  if (config_file) {
    const std::string text = read_file(*config_file);
    for (auto& [k, v] : parse_key_values(text)) kv[k] = v;
    input += "# --config " + config_file->string() + "\n" + text;
    if (!text.empty() && text.back() != '\n') input += '\n';
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + o + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    const std::string key = trim(o.substr(0, eq));
    const std::string value = trim(o.substr(eq + 1));
    kv[key] = value;
    input += "# --set\n" + key + " = " + value + "\n";
  }
  if (seed) {
    kv["seed"] = std::to_string(*seed);
    input += "# --seed\nseed = " + std::to_string(*seed) + "\n";
  }
  ExperimentConfig config = build_config(kv);
  if (have_archive) {
    const KeyValues old = config_to_values(build_config(parse_key_values(read_file(archived))));
    const std::string diff = resolved_diff(config_to_values(config), old);
    if (!diff.empty()) {
      throw ConfigError("config differs from the one archived in " + out_dir.string() + ": " + diff);
    }
    if (fs::exists(out_dir / "config.input")) input = read_file(out_dir / "config.input");
  }
  return {config, input};
}

namespace {

RunDir archived_run_dir(const fs::path& dir, const ExperimentConfig& config, const std::string& input_text) {
  RunDir run(dir);
  if (!fs::exists(run.path("config.toml"))) run.archive_config(config, input_text);
  return run;
}

}  // namespace

Run::Run(const fs::path& dir, const ExperimentConfig& config, const std::string& input_text)
    : dir_(archived_run_dir(dir, config, input_text)),
      config_(config),
      metrics_(dir_.path("metrics.jsonl"), dir_.run_id()),
      timing_(dir_.path("timing.jsonl"), dir_.run_id()) {}

void stage_gen_data(Run& run) {
  Stopwatch sw;
  const auto& c = run.config();
  const SynthData d = gen_language_pair(c.data, stage_rng(c, "data").seed());
  save_synth_data(run.dir(), d, c.data);
  auto& m = run.metrics();
  m.record("data.vocab_a", 0, double(d.vocab_a.size()));
  m.record("data.vocab_b", 0, double(d.vocab_b.size()));
  m.record("data.train_pairs", 0, double(d.train.size()));
  m.record("data.mono_a", 0, double(d.mono_a.size()));
  m.record("data.mono_b", 0, double(d.mono_b.size()));
  m.record("data.valid_pairs", 0, double(d.valid.size()));
  m.record("data.test_pairs", 0, double(d.test.size()));
  spdlog::info("gen-data: {} bilingual, {}/{} monolingual, vocab {}/{}", d.train.size(), d.mono_a.size(),
               d.mono_b.size(), d.vocab_a.size(), d.vocab_b.size());
  run.timing().record("gen-data", sw.seconds());
}

void stage_train_lm(Run& run) {
  Stopwatch sw;
  const auto& c = run.config();
  const LoadedData d = load_training_data(run.dir());
  struct Side {
    const char* tag;
    const MonolingualCorpus* mono;
    std::size_t vocab;
  };
  for (const Side& side : {Side{"a", &d.mono_a, d.vocab_a.size()}, Side{"b", &d.mono_b, d.vocab_b.size()}}) {
    Rng rng = stage_rng(c, std::string("lm-") + side.tag);
    const LmTrainResult res = lm_train(*side.mono, side.vocab, c.lm, rng);
    const std::string name = std::string("lm.") + side.tag;
    for (const auto& e : res.log) {
      run.metrics().record(name + ".train_nll", e.epoch, e.train_nll_per_token);
      run.metrics().record(name + ".valid_ppl", e.epoch, e.valid_ppl);
    }
    save_lm(run.dir().path(name), res.params);
    spdlog::info("train-lm: {} held-out perplexity {:.3f}", name, res.log.empty() ? 0.0 : res.log.back().valid_ppl);
  }
  run.timing().record("train-lm", sw.seconds());
}

namespace {

void log_mle(MetricsLog& m, const std::string& name, const MleEvalLog& e) {
  m.record(name + ".train_ll", e.batches, e.train_ll_per_token);
  m.record(name + ".valid_bleu", e.batches, e.valid_bleu);
  spdlog::debug("{}: epoch {} batch {} ll/token {:.4f} valid BLEU {:.2f}", name, e.epoch, e.batches,
                e.train_ll_per_token, e.valid_bleu);
}

struct Pair {
  Seq2SeqParams ab;
  Seq2SeqParams ba;
};

Pair load_pair(const RunDir& run, const std::string& stem) {
  return {load_seq2seq(RunDir::require(run.path(stem + ".ab"))), load_seq2seq(RunDir::require(run.path(stem + ".ba")))};
}

}  // namespace

void stage_train_nmt(Run& run) {
  Stopwatch sw;
  const auto& c = run.config();
  const LoadedData d = load_training_data(run.dir());
  const BilingualCorpus warm = subsample_bilingual(d.train, c.bilingual_fraction, stage_rng(c, "subsample").seed());
  save_bilingual(run.dir(), "warm", warm, d.vocab_a, d.vocab_b);
  run.metrics().record("nmt.warm_pairs", 0, double(warm.size()));

  const BilingualCorpus warm_ba = swap_sides(warm);
  const BilingualCorpus valid_ba = swap_sides(d.valid);
  for (const bool forward : {true, false}) {
    const std::string name = forward ? "nmt.ab" : "nmt.ba";
    Rng rng = stage_rng(c, name);
    const MleResult res =
        forward ? train_mle(warm, d.valid, d.vocab_a.size(), d.vocab_b.size(), c.nmt, rng, std::nullopt,
                            [&](const MleEvalLog& e) { log_mle(run.metrics(), name, e); })
                : train_mle(warm_ba, valid_ba, d.vocab_b.size(), d.vocab_a.size(), c.nmt, rng, std::nullopt,
                            [&](const MleEvalLog& e) { log_mle(run.metrics(), name, e); });
    save_seq2seq(run.dir().path(name), res.params);
    spdlog::info("train-nmt: {} on {} pairs, best valid BLEU {:.2f}", name, warm.size(), res.best_valid_bleu);
  }
  run.timing().record("train-nmt", sw.seconds());
}

void stage_train_pseudo(Run& run) {
  Stopwatch sw;
  const auto& c = run.config();
  const LoadedData d = load_training_data(run.dir());
  const BilingualCorpus warm = load_bilingual(run.dir(), "warm", d.vocab_a, d.vocab_b);
  const Pair nmt = load_pair(run.dir(), "nmt");
  auto cap = [&](const MonolingualCorpus& m) {
    MonolingualCorpus out = m;
    if (c.pseudo.max_sentences > 0 && out.sentences.size() > c.pseudo.max_sentences) {
      out.sentences.resize(c.pseudo.max_sentences);
    }
    return out;
  };
  const MonolingualCorpus mono_a = cap(d.mono_a);
  const MonolingualCorpus mono_b = cap(d.mono_b);
  const bool back = c.pseudo.orientation == PseudoOrientation::BackTranslation;

  // A→B pairs come from B text through nmt.ba (back) or A text through nmt.ab (forward).
  const BilingualCorpus pseudo_ab =
      back ? generate_pseudo_pairs(nmt.ba, mono_b, c.pseudo.beam, c.pseudo.max_len, c.pseudo.orientation)
           : generate_pseudo_pairs(nmt.ab, mono_a, c.pseudo.beam, c.pseudo.max_len, c.pseudo.orientation);
  const BilingualCorpus pseudo_ba =
      back ? generate_pseudo_pairs(nmt.ab, mono_a, c.pseudo.beam, c.pseudo.max_len, c.pseudo.orientation)
           : generate_pseudo_pairs(nmt.ba, mono_b, c.pseudo.beam, c.pseudo.max_len, c.pseudo.orientation);
  save_bilingual(run.dir(), "pseudo.ab", pseudo_ab, d.vocab_a, d.vocab_b);
  save_bilingual(run.dir(), "pseudo.ba", pseudo_ba, d.vocab_b, d.vocab_a);
  run.metrics().record("pseudo.ab.pairs", 0, double(pseudo_ab.size()));
  run.metrics().record("pseudo.ba.pairs", 0, double(pseudo_ba.size()));

  for (const bool forward : {true, false}) {
    const std::string name = forward ? "pseudo.ab" : "pseudo.ba";
    Rng rng = stage_rng(c, name);
    auto progress = [&](const MleEvalLog& e) { log_mle(run.metrics(), name, e); };
    const MleResult res = forward ? train_pseudo(warm, pseudo_ab, d.valid, d.vocab_a.size(), d.vocab_b.size(),
                                                 c.pseudo.mle, rng, progress)
                                  : train_pseudo(swap_sides(warm), pseudo_ba, swap_sides(d.valid), d.vocab_b.size(),
                                                 d.vocab_a.size(), c.pseudo.mle, rng, progress);
    save_seq2seq(run.dir().path(name), res.params);
    spdlog::info("train-pseudo: {} best valid BLEU {:.2f}", name, res.best_valid_bleu);
  }
  run.timing().record("train-pseudo", sw.seconds());
}

void stage_train_dual(Run& run) {
  Stopwatch sw;
  const auto& c = run.config();
  const LoadedData d = load_training_data(run.dir());
  const BilingualCorpus warm = load_bilingual(run.dir(), "warm", d.vocab_a, d.vocab_b);
  const Pair nmt = load_pair(run.dir(), "nmt");
  const LmParams lm_a = load_lm(RunDir::require(run.dir().path("lm.a")));
  const LmParams lm_b = load_lm(RunDir::require(run.dir().path("lm.b")));

  auto& m = run.metrics();
  std::ofstream stats_log(run.dir().path("dual_stats.jsonl"), std::ios::trunc);
  DualCallbacks cb;
  cb.on_stats = [&](const DualStepStats& s) {
    stats_log << to_json(s).dump() << '\n';
    const std::string p = std::string("dual.") + s.direction + ".";
    m.record(p + "mean_r1", s.step, s.mean_r1);
    m.record(p + "mean_r2", s.step, s.mean_r2);
    m.record(p + "mean_r", s.step, s.mean_r);
    m.record(p + "grad_norm_ab", s.step, s.grad_norm_ab);
    m.record(p + "grad_norm_ba", s.step, s.grad_norm_ba);
    if (s.direction == 'A') {
      m.record("dual.mono_fraction", s.step, s.mono_fraction);
      m.record("dual.n_mono", s.step, double(s.n_mono));
      m.record("dual.n_bi", s.step, double(s.n_bi));
      m.record("dual.bi_grad_norm", s.step, s.bi_grad_norm);
      m.record("dual.lr_forward", s.step, s.lr_forward);
      m.record("dual.lr_backward", s.step, s.lr_backward);
      m.record("dual.lr_bilingual", s.step, s.lr_bilingual);
    }
  };
  cb.on_checkpoint = [&](std::size_t step, const Seq2SeqParams& ab, const Seq2SeqParams& ba, double vab, double vba,
                         bool best) {
    save_seq2seq(run.dir().path("dual.ab." + std::to_string(step)), ab);
    save_seq2seq(run.dir().path("dual.ba." + std::to_string(step)), ba);
    m.record("dual.val_bleu_ab", step, vab);
    m.record("dual.val_bleu_ba", step, vba);
    if (best) run.dir().write_text("dual.best", std::to_string(step) + "\n");
    spdlog::info("train-dual: step {} valid BLEU {:.2f} / {:.2f}{}", step, vab, vba, best ? " (best)" : "");
  };

  Rng rng = stage_rng(c, "dual");
  const DualResult res = train_dual({d.mono_a, d.mono_b, warm, d.valid}, nmt.ab, nmt.ba, lm_a, lm_b, c.dual, rng, cb);
  stats_log.close();
  // Without validation there are no checkpoints yet; the result is the final model pair.
  const fs::path best_ab = run.dir().path("dual.ab." + std::to_string(res.best_step));
  if (!fs::exists(best_ab.string() + ".meta")) {
    save_seq2seq(best_ab, res.ab);
    save_seq2seq(run.dir().path("dual.ba." + std::to_string(res.best_step)), res.ba);
  }
  run.dir().write_text("dual.best", std::to_string(res.best_step) + "\n");
  m.record("dual.steps", res.steps, double(res.steps));
  m.record("dual.best_step", res.steps, double(res.best_step));
  spdlog::info("train-dual: {} steps, best at {}", res.steps, res.best_step);
  run.timing().record("train-dual", sw.seconds());
}

EvalSummary stage_evaluate(Run& run) {
  Stopwatch sw;
  const auto& c = run.config();
  const RunDir& dir = run.dir();
  const Vocabulary va = load_vocab(RunDir::require(dir.data("vocab.a")));
  const Vocabulary vb = load_vocab(RunDir::require(dir.data("vocab.b")));
  const BilingualCorpus test = load_test_data(dir, va, vb);
  std::vector<Sentence> test_a, test_b;
  for (const auto& p : test.pairs) {
    test_a.push_back(p.source);
    test_b.push_back(p.target);
  }

  EvalSummary summary;
  summary.run_id = dir.run_id();
  summary.setting = c.setting;
  nlohmann::ordered_json detail;

  for (const std::string sys : {"nmt", "pseudo", "dual"}) {
    std::string suffix;
    if (sys == "dual") {
      if (!fs::exists(dir.path("dual.best"))) continue;
      suffix = dir.read_text("dual.best");
      suffix.erase(suffix.find_last_not_of(" \n\r") + 1);
      suffix = "." + suffix;
    }
    const fs::path ab_path = dir.path(sys + ".ab" + suffix);
    const fs::path ba_path = dir.path(sys + ".ba" + suffix);
    if (!fs::exists(ab_path.string() + ".meta")) continue;
    const Seq2SeqParams ab = load_seq2seq(RunDir::require(ab_path));
    const Seq2SeqParams ba = load_seq2seq(RunDir::require(ba_path));
    const TranslateFn tab = beam_translator(ab, c.eval.beam, c.eval.max_len, c.eval.len_norm);
    const TranslateFn tba = beam_translator(ba, c.eval.beam, c.eval.max_len, c.eval.len_norm);

    const auto hyp_ab = translate_all(tab, test_a);
    const auto hyp_ba = translate_all(tba, test_b);
    const auto back_a = translate_all(tba, hyp_ab);
    const auto back_b = translate_all(tab, hyp_ba);
    const BleuReport r_ab = corpus_bleu(hyp_ab, test_b);
    const BleuReport r_ba = corpus_bleu(hyp_ba, test_a);
    const BleuReport r_aba = corpus_bleu(back_a, test_a);
    const BleuReport r_bab = corpus_bleu(back_b, test_b);
    summary.systems.push_back({sys, r_ab.bleu, r_ba.bleu, r_aba.bleu, r_bab.bleu});

    auto lines = [](const Vocabulary& v, const std::vector<Sentence>& s) {
      std::vector<std::string> out;
      for (const auto& x : s) out.push_back(decode(v, x));
      return out;
    };
    write_lines(dir.path("hyp." + sys + ".ab"), lines(vb, hyp_ab));
    write_lines(dir.path("hyp." + sys + ".ba"), lines(va, hyp_ba));
    write_lines(dir.path("hyp." + sys + ".aba"), lines(va, back_a));
    write_lines(dir.path("hyp." + sys + ".bab"), lines(vb, back_b));

    const auto buckets_ab = bleu_by_length(hyp_ab, test_b, test_a, default_length_buckets());
    const auto buckets_ba = bleu_by_length(hyp_ba, test_a, test_b, default_length_buckets());
    dir.write_text("buckets." + sys + ".ab.csv", to_csv(buckets_ab));
    dir.write_text("buckets." + sys + ".ba.csv", to_csv(buckets_ba));

    detail[sys] = {{"bleu_ab", to_json(r_ab)},
                   {"bleu_ba", to_json(r_ba)},
                   {"recon_aba", to_json(r_aba)},
                   {"recon_bab", to_json(r_bab)},
                   {"buckets_ab", to_json(buckets_ab)},
                   {"buckets_ba", to_json(buckets_ba)}};
    auto& m = run.metrics();
    m.record("eval." + sys + ".bleu_ab", 0, r_ab.bleu);
    m.record("eval." + sys + ".bleu_ba", 0, r_ba.bleu);
    m.record("eval." + sys + ".recon_aba", 0, r_aba.bleu);
    m.record("eval." + sys + ".recon_bab", 0, r_bab.bleu);
    spdlog::info("evaluate: {} A→B {}", sys, summary_line(r_ab));
    spdlog::info("evaluate: {} B→A {}", sys, summary_line(r_ba));
    spdlog::info("evaluate: {} reconstruction A→B→A {:.2f}, B→A→B {:.2f}", sys, r_aba.bleu, r_bab.bleu);
  }

  dir.write_text("eval.json", to_json(summary).dump(1) + "\n");
  dir.write_text("eval_detail.json", detail.dump(1) + "\n");
  const auto rows = compare_rows(summary, dir.root().filename().string());
  dir.write_text("report.md", compare_markdown(rows));
  dir.write_text("report.csv", compare_csv(rows));
  dir.write_text("report.json", compare_json(rows).dump(1) + "\n");
  run.timing().record("evaluate", sw.seconds());
  return summary;
}

std::vector<GradCheckSummary> run_grad_checks(std::size_t seeds, std::uint64_t base_seed, double tol) {
  GradCheckOptions opt;
  opt.step = 1e-3;
  opt.extrapolate = true;
  opt.tolerance = tol;

  auto randomize = [](ParamStore& store, Rng& rng) {
    for (auto& e : store) {
      for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value.data()[i] = rng.uniform(-0.8, 0.8);
    }
  };
  auto sentence = [](Rng& rng, std::size_t vocab) {
    Sentence s(1 + rng.below(5));
    for (auto& t : s) {
      do t = static_cast<TokenId>(rng.below(vocab));
      while (t == kEos);
    }
    return s;
  };
  auto tally = [](GradCheckSummary& g, const GradReport& r) {
    ++g.seeds;
    if (!r.pass) ++g.failures;
    g.max_rel_error = std::max(g.max_rel_error, r.max_rel_error);
  };

  GradCheckSummary s2s{"seq2seq"}, lm{"langmodel"}, mle{"mle-batch"};
  for (std::size_t i = 0; i < seeds; ++i) {
    Rng rng = Rng(base_seed + i).split("grad-check");
    const Seq2SeqDims dims{8, 7, 6, 8, 5};
    Seq2SeqParams p = zero_seq2seq(dims);
    randomize(p.store, rng);
    const Sentence src = sentence(rng, dims.src_vocab);
    const Sentence tgt = sentence(rng, dims.tgt_vocab);
    tally(s2s, grad_check([&](const ParamStore& st) { return sequence_log_prob({dims, st}, src, tgt); },
                          log_prob_gradient(p, src, tgt), p.store, opt));

    std::vector<SentencePair> batch;
    for (int k = 0; k < 3; ++k) batch.push_back({sentence(rng, dims.src_vocab), sentence(rng, dims.tgt_vocab)});
    tally(mle, grad_check([&](const ParamStore& st) { return mle_batch_objective({dims, st}, batch); },
                          mle_batch_gradient(p, batch), p.store, opt));

    const LmDims ld{8, 6, 10};
    LmParams l = zero_lm(ld);
    randomize(l.store, rng);
    const Sentence s = sentence(rng, ld.vocab);
    tally(lm, grad_check([&](const ParamStore& st) { return lm_score({ld, st}, s); }, lm_gradient(l, s), l.store, opt));
  }
  return {s2s, lm, mle};
}

bool ReproResult::all_pass() const {
  return std::all_of(trends.begin(), trends.end(), [](const TrendCheck& t) { return t.pass; });
}

ReproResult repro_small(const fs::path& out, const ExperimentConfig& base, const std::string& input_text) {
  Stopwatch sw;
  for (const char* sub : {"small", "large"}) {
    if (fs::exists(out / sub / "metrics.jsonl")) {
      throw ConfigError((out / sub).string() + " already holds a run; choose a fresh --out");
    }
  }
  ExperimentConfig small = base;
  small.setting = Setting::Small;
  if (base.setting != Setting::Small) small.bilingual_fraction = default_config(Setting::Small).bilingual_fraction;
  ExperimentConfig large = base;
  large.setting = Setting::Large;
  large.bilingual_fraction = default_config(Setting::Large).bilingual_fraction;

  ReproResult result;
  {
    spdlog::info("repro-small: Small setting in {}", (out / "small").string());
    Run run(out / "small", small, input_text);
    stage_gen_data(run);
    stage_train_lm(run);
    stage_train_nmt(run);
    stage_train_pseudo(run);
    stage_train_dual(run);
    result.small = stage_evaluate(run);
  }
  {
    spdlog::info("repro-small: Large setting in {}", (out / "large").string());
    Run run(out / "large", large, input_text);
    stage_gen_data(run);
    stage_train_lm(run);
    stage_train_nmt(run);
    stage_train_dual(run);
    result.large = stage_evaluate(run);
  }
  result.trends = trend_checks(result.small, result.large);
  auto rows = compare_rows(result.small, "small");
  for (auto& r : compare_rows(result.large, "large")) rows.push_back(r);
  write_file(out / "compare.md", compare_markdown(rows));
  write_file(out / "compare.csv", compare_csv(rows));
  write_file(out / "compare.json", compare_json(rows).dump(1) + "\n");
  write_file(out / "trends.md", trends_markdown(result.trends));
  write_file(out / "trends.json", to_json(result.trends).dump(1) + "\n");
  result.seconds = sw.seconds();
  nlohmann::ordered_json t;
  t["stage"] = "repro-small";
  t["seconds"] = result.seconds;
  std::ofstream(out / "timing.jsonl", std::ios::app) << t.dump() << '\n';
  return result;
}

}  // namespace dualoop::cli
