#include "dualoop/cli/pipeline.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

using namespace dualoop;
using namespace dualoop::cli;

namespace {

ExperimentConfig tiny_config() {
  KeyValues kv{{"data.n_bilingual", "200"}, {"data.n_mono_a", "200"}, {"data.n_mono_b", "200"},
               {"data.n_valid", "20"},      {"data.n_test", "20"},     {"data.bilingual_fraction", "0.25"},
               {"lm.emb", "8"},             {"lm.hid", "8"},           {"lm.max_epochs", "1"},
               {"nmt.emb", "8"},            {"nmt.hid", "8"},          {"nmt.max_epochs", "1"},
               {"nmt.eval_beam", "2"},      {"pseudo.emb", "8"},       {"pseudo.hid", "8"},
               {"pseudo.max_epochs", "1"},  {"pseudo.eval_beam", "2"}, {"dual.max_steps", "6"},
               {"dual.eval_every", "3"},    {"dual.eval_beam", "2"},   {"dual.batch", "4"},
               {"dual.ramp_steps", "4"},    {"dual.max_mid_len", "15"}, {"eval.beam", "2"}};
  return build_config(kv);
}

void run_tiny(const fs::path& dir, bool with_pseudo = true) {
  cli::Run run(dir, tiny_config(), "");
  stage_gen_data(run);
  stage_train_lm(run);
  stage_train_nmt(run);
  if (with_pseudo) stage_train_pseudo(run);
  stage_train_dual(run);
  stage_evaluate(run);
}

}  // namespace

TEST(Config, ParsesSectionsCommentsAndQuotes) {
  const auto kv = parse_key_values(
      "seed = 4  # trailing\n"
      "[dual]\n"
      "alpha = 0.5\n"
      "estimator = \"exact-expectation\"\n"
      "\n"
      "[data]\n"
      "noise_rate=0.2\n");
  ASSERT_EQ(kv.size(), 4u);
  EXPECT_EQ(kv.at("seed"), "4");
  EXPECT_EQ(kv.at("dual.alpha"), "0.5");
  EXPECT_EQ(kv.at("dual.estimator"), "exact-expectation");
  EXPECT_EQ(kv.at("data.noise_rate"), "0.2");
  EXPECT_THROW(parse_key_values("no equals sign\n"), ConfigError);
  EXPECT_THROW(parse_key_values("[open\n"), ConfigError);
}

TEST(Config, UnknownKeysAreAllListed) {
  try {
    build_config({{"dual.alpah", "1"}, {"seed", "3"}, {"zzz", "0"}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("dual.alpah"), std::string::npos) << msg;
    EXPECT_NE(msg.find("zzz"), std::string::npos) << msg;
    EXPECT_EQ(msg.find("seed"), std::string::npos) << msg;
  }
}

TEST(Config, BadValuesAreRejected) {
  EXPECT_THROW(build_config({{"dual.alpha", "1.5"}}), ConfigError);
  EXPECT_THROW(build_config({{"dual.K", "two"}}), ConfigError);
  EXPECT_THROW(build_config({{"dual.K", "-1"}}), ConfigError);
  EXPECT_THROW(build_config({{"dual.symmetric", "yes"}}), ConfigError);
  EXPECT_THROW(build_config({{"dual.estimator", "sampled"}}), ConfigError);
  EXPECT_THROW(build_config({{"setting", "medium"}}), ConfigError);
  EXPECT_THROW(build_config({{"data.bilingual_fraction", "0"}}), ConfigError);
}

TEST(Config, SettingPicksBilingualFraction) {
  EXPECT_DOUBLE_EQ(build_config({}).bilingual_fraction, 0.1);
  EXPECT_DOUBLE_EQ(build_config({{"setting", "large"}}).bilingual_fraction, 1.0);
  // Explicit keys win over the setting regardless of key order.
  EXPECT_DOUBLE_EQ(build_config({{"setting", "large"}, {"data.bilingual_fraction", "0.5"}}).bilingual_fraction, 0.5);
}

TEST(Config, TextRoundTripsEveryKey) {
  ExperimentConfig c = tiny_config();
  c.dual.alpha = 0.123456789012345;
  c.dual.gamma1.decay = 1e-3;
  c.data.reordering = Reordering::SwapAdjacent;
  c.pseudo.orientation = PseudoOrientation::ForwardTranslation;
  const std::string text = config_to_text(c);
  const ExperimentConfig back = build_config(parse_key_values(text));
  EXPECT_EQ(config_to_text(back), text);
  EXPECT_EQ(back.dual.alpha, c.dual.alpha);
}

TEST(Config, SchemaCoversEveryKey) {
  const auto values = config_to_values(default_config(Setting::Small));
  EXPECT_EQ(values.size(), config_schema().size());
  for (const auto& e : config_schema()) {
    EXPECT_TRUE(values.count(e.key)) << e.key;
    EXPECT_FALSE(e.help.empty()) << e.key;
  }
}

TEST(Report, GapsRenderAsDash) {
  EvalSummary e;
  e.run_id = "r";
  e.systems.push_back({"nmt", 10.0, 12.5, std::nullopt, 40.0});
  const auto rows = compare_rows(e, "one");
  ASSERT_EQ(rows.size(), 1u);
  const std::string md = compare_markdown(rows);
  EXPECT_NE(md.find("| one | small | NMT | 10.00 | 12.50 | — | 40.00 |"), std::string::npos) << md;
  const std::string csv = compare_csv(rows);
  EXPECT_NE(csv.find("one,small,nmt,10.00,12.50,,40.00"), std::string::npos) << csv;
}

TEST(Report, ThreeSystemsGiveThreeRows) {
  EvalSummary e;
  e.systems = {{"dual", 3, 4, 5, 6}, {"nmt", 1, 2, 3, 4}, {"pseudo", 2, 3, 4, 5}};
  const auto rows = compare_rows(e, "x");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].system, "nmt");
  EXPECT_EQ(rows[1].system, "pseudo");
  EXPECT_EQ(rows[2].system, "dual");
  const auto j = compare_json(rows);
  EXPECT_EQ(j.size(), 3u);
}

TEST(Report, EvalJsonRoundTrip) {
  EvalSummary e;
  e.run_id = "abc";
  e.setting = Setting::Large;
  e.systems = {{"nmt", 1.5, std::nullopt, 3.25, 4}};
  const EvalSummary back = eval_from_json(nlohmann::json::parse(to_json(e).dump()));
  EXPECT_EQ(back.run_id, "abc");
  EXPECT_EQ(back.setting, Setting::Large);
  ASSERT_EQ(back.systems.size(), 1u);
  EXPECT_EQ(back.systems[0].bleu_ab, 1.5);
  EXPECT_FALSE(back.systems[0].bleu_ba);
  EXPECT_EQ(back.systems[0].recon_aba, 3.25);
}

TEST(Report, TrendChecks) {
  EvalSummary small, large;
  small.systems = {{"nmt", 40, 50, 60, 45}, {"pseudo", 44, 55, {}, {}}, {"dual", 45, 55, 70, 51}};
  large.systems = {{"nmt", 70, 72, 80, 80}, {"dual", 71, 73, 82, 81}};
  auto checks = trend_checks(small, large);
  ASSERT_EQ(checks.size(), 8u);
  for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.name << " " << c.value;

  small.systems[2].bleu_ba = 51.0;  // gain 1 < 2, below pseudo, below the large gain
  checks = trend_checks(small, large);
  EXPECT_TRUE(checks[0].pass);
  EXPECT_FALSE(checks[1].pass);
  EXPECT_FALSE(checks[3].pass);
  EXPECT_FALSE(checks[7].pass);

  large.systems.pop_back();  // missing dual in Large: comparison cannot pass
  checks = trend_checks(small, large);
  EXPECT_FALSE(checks[6].pass);
  EXPECT_TRUE(std::isnan(checks[6].value));
}

TEST(Report, SmallGainMustStrictlyExceedLarge) {
  EvalSummary small, large;
  small.systems = {{"nmt", 10, 10, 10, 10}, {"dual", 13, 13, 20, 20}};
  large.systems = {{"nmt", 20, 20, 20, 20}, {"dual", 23, 23, 20, 20}};
  const auto checks = trend_checks(small, large);
  EXPECT_FALSE(checks[6].pass);
  EXPECT_FALSE(checks[7].pass);
}

TEST(Metrics, StepsMayNotGoBack) {
  const auto dir = fixture::temp_dir("metrics");
  {
    MetricsLog m(dir / "m.jsonl", "run1");
    m.record("a", 0, 1.0);
    m.record("a", 0, 2.0);
    m.record("a", 5, 3.0);
    m.record("b", 1, 4.0);
    EXPECT_THROW(m.record("a", 4, 0.0), std::runtime_error);
  }
  MetricsLog reopened(dir / "m.jsonl", "run1");
  EXPECT_THROW(reopened.record("a", 1, 0.0), std::runtime_error);
  reopened.record("a", 6, 0.5);
  const auto recs = read_metrics(dir / "m.jsonl");
  ASSERT_EQ(recs.size(), 5u);
  EXPECT_EQ(recs[2].step, 5u);
  EXPECT_EQ(recs[4].value, 0.5);
  EXPECT_EQ(recs[0].run, "run1");
}

TEST(RunDirectory, ConfigIsArchivedAndChecked) {
  const auto dir = fixture::temp_dir("archive");
  auto first = resolve_config(dir, std::nullopt, {"seed=9", "dual.alpha = 0.25"}, std::nullopt);
  EXPECT_EQ(first.config.seed, 9u);
  EXPECT_EQ(first.config.dual.alpha, 0.25);
  cli::Run run(dir, first.config, first.input_text);
  EXPECT_EQ(read_file(dir / "seed"), "9\n");
  EXPECT_EQ(read_file(dir / "config.toml"), config_to_text(first.config));
  EXPECT_NE(read_file(dir / "config.input").find("dual.alpha = 0.25"), std::string::npos);

  // Reopening with nothing new, or with an agreeing value, is fine.
  EXPECT_NO_THROW(resolve_config(dir, std::nullopt, {}, std::nullopt));
  EXPECT_NO_THROW(resolve_config(dir, std::nullopt, {"seed=9"}, std::nullopt));
  EXPECT_THROW(resolve_config(dir, std::nullopt, {}, 10), ConfigError);
  EXPECT_THROW(resolve_config(dir, std::nullopt, {"noequals"}, std::nullopt), ConfigError);
  EXPECT_THROW(resolve_config(dir, fs::path(dir / "absent.toml"), {}, std::nullopt), MissingInput);
}

TEST(Pipeline, OnlyEvaluateReadsTheTestSplit) {
  const auto dir = fixture::temp_dir("notest");
  cli::Run run(dir, tiny_config(), "");
  stage_gen_data(run);
  fs::remove(dir / "data" / "test.a");
  fs::remove(dir / "data" / "test.b");
  EXPECT_NO_THROW(stage_train_lm(run));
  EXPECT_NO_THROW(stage_train_nmt(run));
  EXPECT_NO_THROW(stage_train_pseudo(run));
  EXPECT_NO_THROW(stage_train_dual(run));
  try {
    stage_evaluate(run);
    FAIL() << "evaluate ran without the test split";
  } catch (const MissingInput& e) {
    EXPECT_NE(std::string(e.what()).find("test.a"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, MissingInputsNameThePath) {
  const auto dir = fixture::temp_dir("missing");
  cli::Run run(dir, tiny_config(), "");
  try {
    stage_train_dual(run);
    FAIL();
  } catch (const MissingInput& e) {
    EXPECT_NE(std::string(e.what()).find("vocab.a"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, EndToEndIsSelfContainedAndDeterministic) {
  const auto d1 = fixture::temp_dir("e2e1");
  const auto d2 = fixture::temp_dir("e2e2");
  run_tiny(d1);
  run_tiny(d2);
  for (const char* f : {"metrics.jsonl", "eval.json", "dual_stats.jsonl", "config.toml", "dual.best",
                        "data/warm.a", "data/pseudo.ab.a", "hyp.dual.ab", "buckets.nmt.ab.csv"}) {
    ASSERT_TRUE(fs::exists(d1 / f)) << f;
    EXPECT_EQ(read_file(d1 / f), read_file(d2 / f)) << f;
  }
  const std::string best = read_file(d1 / "dual.best");
  EXPECT_TRUE(fs::exists(d1 / ("dual.ab." + best.substr(0, best.size() - 1) + ".meta")));

  // Soft-landing fractions in the log start at the initial value and never fall.
  double prev = 0.0;
  std::size_t seen = 0;
  for (const auto& r : read_metrics(d1 / "metrics.jsonl")) {
    if (r.metric != "dual.mono_fraction") continue;
    if (seen++ == 0) {
      EXPECT_EQ(r.value, 0.5);
    }
    EXPECT_GE(r.value, prev);
    if (r.step >= 4) {
      EXPECT_EQ(r.value, 1.0);
    }
    prev = r.value;
  }
  EXPECT_EQ(seen, 6u);

  const auto rows = compare_rows(std::vector<fs::path>{d1});
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.bleu_ab && r.bleu_ba && r.recon_aba && r.recon_bab) << r.system;
  }
}

TEST(Pipeline, CompareShowsGapsForUnevaluatedRuns) {
  const auto dir = fixture::temp_dir("noeval");
  cli::Run run(dir, tiny_config(), "");
  stage_gen_data(run);
  stage_train_lm(run);
  stage_train_nmt(run);
  const auto rows = compare_rows(std::vector<fs::path>{dir});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].system, "nmt");
  EXPECT_FALSE(rows[0].bleu_ab);
  EXPECT_NE(compare_markdown(rows).find("| NMT | — | — | — | — |"), std::string::npos);

  const auto empty = fixture::temp_dir("emptyrun");
  const auto none = compare_rows(std::vector<fs::path>{empty});
  ASSERT_EQ(none.size(), 1u);
  EXPECT_EQ(none[0].system, "—");
  EXPECT_THROW(compare_rows(std::vector<fs::path>{empty / "nope"}), MissingInput);
}

TEST(GradCheck, AllModulesPassOnSeededModels) {
  for (const auto& r : run_grad_checks(3, 11, 1e-4)) {
    EXPECT_EQ(r.seeds, 3u) << r.name;
    EXPECT_EQ(r.failures, 0u) << r.name << " max rel " << r.max_rel_error;
  }
}

#ifdef DUALOOP_BIN
namespace {
int run_cli(const std::string& args) {
  const int rc = std::system((std::string(DUALOOP_BIN) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST(ExitCodes, UsageValidationAndSuccess) {
  const auto dir = fixture::temp_dir("exitcodes");
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("gen-data --seed notanumber --out " + (dir / "a").string()), 2);
  EXPECT_EQ(run_cli("gen-data --out " + (dir / "b").string() + " --set no.such.key=1"), 1);
  EXPECT_EQ(run_cli("train-lm --out " + (dir / "never").string()), 1);
  EXPECT_FALSE(fs::exists(dir / "never"));
  EXPECT_EQ(run_cli("grad-check --seeds 2"), 0);
  EXPECT_EQ(run_cli("grad-check --seeds 1 --tol 0"), 1);
  EXPECT_EQ(run_cli("schema"), 0);
  EXPECT_EQ(run_cli("--help"), 0);
}
#endif
