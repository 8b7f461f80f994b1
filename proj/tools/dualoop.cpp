// dualoop: synthetic-language dual learning experiments.
#include "dualoop/cli/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace cli = dualoop::cli;
namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigHelp = R"(
Config files are flat key = value lines. A [section] header prefixes the
keys after it with "section.", so "[dual]" then "alpha = 0.005" sets
dual.alpha. '#' starts a comment. Keys are listed by `dualoop schema`.
Precedence: the run directory's archived config.toml, then --config, then
each --set in order, then --seed.

Environment: DUALOOP_LOG = trace|debug|info|warn|error|off (default info).
Exit codes: 0 success, 1 validation or acceptance failure, 2 usage error.)";

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("dualoop");
  logger->set_pattern("[%H:%M:%S] %^%l%$ %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("DUALOOP_LOG")) {
    const auto level = spdlog::level::from_str(lvl);
    if (level == spdlog::level::off && std::string(lvl) != "off") {
      spdlog::warn("DUALOOP_LOG='{}' is not a level; using info", lvl);
    } else {
      spdlog::set_level(level);
    }
  }
}

struct RunOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
};

void add_run_options(CLI::App* app, RunOptions& o) {
  app->add_option("--config", o.config, "config file (key = value)");
  app->add_option("--set", o.sets, "override one key, key=value (repeatable)")->allow_extra_args(false);
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--out", o.out, "run directory")->capture_default_str();
}

cli::ResolvedConfig resolve(const RunOptions& o, const fs::path& dir) {
  std::optional<fs::path> file;
  if (!o.config.empty()) file = o.config;
  return cli::resolve_config(dir, file, o.sets, o.seed);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Dual learning for translation between two synthetic languages."};
  app.footer(kConfigHelp);
  app.require_subcommand(1);

  RunOptions opts;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic language pair into the run directory");
  auto* lm = app.add_subcommand("train-lm", "train the two language models on the monolingual corpora");
  auto* nmt = app.add_subcommand("train-nmt", "train the warm-start NMT models on the bilingual subsample");
  auto* pseudo = app.add_subcommand("train-pseudo", "train the back-translation baseline");
  auto* dual = app.add_subcommand("train-dual", "run dual learning from the warm-start models");
  auto* eval = app.add_subcommand("evaluate", "score every trained system on the test split");
  auto* repro = app.add_subcommand("repro-small", "full Small and Large pipelines, comparison and trend checks");
  for (auto* sub : {gen, lm, nmt, pseudo, dual, eval, repro}) add_run_options(sub, opts);

  std::size_t gc_seeds = 20;
  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  std::string gc_out;
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient checks on tiny seeded models");
  gc->add_option("--seeds", gc_seeds, "models per check")->capture_default_str();
  gc->add_option("--seed", gc_seed, "first seed")->capture_default_str();
  gc->add_option("--tol", gc_tol, "max relative error")->capture_default_str();
  gc->add_option("--out", gc_out, "write grad_check.json here");

  std::vector<std::string> runs;
  std::string cmp_out;
  auto* cmp = app.add_subcommand("compare", "BLEU and reconstruction table over run directories");
  cmp->add_option("runs", runs, "run directories")->required();
  cmp->add_option("--out", cmp_out, "also write compare.{md,csv,json} here");

  auto* schema = app.add_subcommand("schema", "list every config key");
  std::string defaults_setting;
  auto* defaults = app.add_subcommand("defaults", "print the resolved default config");
  defaults->add_option("--setting", defaults_setting, "large or small");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (schema->parsed()) {
      std::cout << cli::schema_text();
      return 0;
    }
    if (defaults->parsed()) {
      auto setting = defaults_setting.empty() ? cli::Setting::Small : cli::parse_setting(defaults_setting);
      std::cout << cli::config_to_text(cli::default_config(setting));
      return 0;
    }
    if (gc->parsed()) {
      const auto results = cli::run_grad_checks(gc_seeds, gc_seed, gc_tol);
      bool ok = true;
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const auto& r : results) {
        std::cout << r.name << ": " << r.seeds - r.failures << "/" << r.seeds << " pass, max rel error "
                  << r.max_rel_error << '\n';
        ok = ok && r.failures == 0;
        j.push_back({{"name", r.name}, {"seeds", r.seeds}, {"failures", r.failures}, {"max_rel_error", r.max_rel_error},
                     {"tolerance", gc_tol}});
      }
      if (!gc_out.empty()) cli::write_file(fs::path(gc_out) / "grad_check.json", j.dump(1) + "\n");
      return ok ? 0 : 1;
    }
    if (cmp->parsed()) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      const auto rows = cli::compare_rows(dirs);
      std::cout << cli::compare_markdown(rows);
      if (!cmp_out.empty()) {
        cli::write_file(fs::path(cmp_out) / "compare.md", cli::compare_markdown(rows));
        cli::write_file(fs::path(cmp_out) / "compare.csv", cli::compare_csv(rows));
        cli::write_file(fs::path(cmp_out) / "compare.json", cli::compare_json(rows).dump(1) + "\n");
      }
      return 0;
    }
    if (repro->parsed()) {
      const fs::path out = opts.out;
      auto resolved = resolve(opts, out / "small");
      const auto res = cli::repro_small(out, resolved.config, resolved.input_text);
      std::cout << cli::compare_markdown([&] {
        auto rows = cli::compare_rows(res.small, "small");
        for (auto& r : cli::compare_rows(res.large, "large")) rows.push_back(r);
        return rows;
      }()) << '\n'
                << cli::trends_markdown(res.trends);
      spdlog::info("repro-small: {:.0f} s", res.seconds);
      return res.all_pass() ? 0 : 1;
    }

    const fs::path out = opts.out;
    if (!gen->parsed()) cli::RunDir::require(out / "config.toml");
    auto resolved = resolve(opts, out);
    cli::Run run(out, resolved.config, resolved.input_text);
    if (gen->parsed()) cli::stage_gen_data(run);
    if (lm->parsed()) cli::stage_train_lm(run);
    if (nmt->parsed()) cli::stage_train_nmt(run);
    if (pseudo->parsed()) cli::stage_train_pseudo(run);
    if (dual->parsed()) cli::stage_train_dual(run);
    if (eval->parsed()) std::cout << cli::compare_markdown(cli::compare_rows(cli::stage_evaluate(run), out.filename().string()));
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
