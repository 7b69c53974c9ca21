// siegelnet: dataset generation, embedding, training and self-checks.
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "siegelnet/cli/commands.hpp"
#include "siegelnet/cli/selfcheck.hpp"
#include "siegelnet/siegel.hpp"

namespace fs = std::filesystem;
using namespace siegelnet;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int runs = 0;
  std::string level = "fast";
  std::string fault;
};

cli::CommandContext context(const CLI::App& sub, const Flags& f) {
  cli::CommandContext ctx;
  ctx.base_dir = fs::path(f.config).parent_path();
  if (ctx.base_dir.empty()) ctx.base_dir = ".";
  auto given = [&](const char* name) {
    const auto* o = sub.get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  if (given("--seed")) ctx.seed = f.seed;
  if (given("--runs")) ctx.runs = f.runs;
  return ctx;
}

int run_selfcheck(const CLI::App& sub, const Flags& f) {
  if (!f.fault.empty()) {
    if (f.fault != "cayley-sign") siegelnet::fail(ErrorKind::ConfigError, "unknown fault \"" + f.fault + "\"");
    siegel::fault::set_cayley_sign_flip(true);
  }
  const auto level = cli::parse_level(f.level);
  const auto report = cli::run_selfcheck(level, sub.count("--seed") ? f.seed : 0, [](const cli::CheckResult& c) {
    std::cout << (c.passed() ? "PASS " : "FAIL ") << c.name << "  trials=" << c.trials << " worst=" << c.worst
              << " tol=" << c.tolerance;
    if (!c.passed()) std::cout << "  (" << c.detail << ")";
    std::cout << "\n";
  });
  std::cout << (report.passed() ? "selfcheck passed" : "selfcheck FAILED") << " in " << report.seconds << " s\n";
  if (!f.out.empty()) {
    std::ofstream out(f.out, std::ios::trunc);
    out << report.to_json().dump(2) << "\n";
  }
  return report.passed() ? cli::kExitOk : cli::kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Siegel-space classifiers: data generation, embedding, training, baselines, self-checks"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", f.config, "JSON config file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output path")->required();
    sub->add_option("--seed", f.seed, "seed (overrides the config)");
  };
  auto* gen = app.add_subcommand("gen-radar", "simulate AR clutter and write a dataset");
  add_common(gen, true);
  auto* emb = app.add_subcommand("embed-graph", "embed a feature CSV's cosine graph into the Siegel space");
  add_common(emb, true);
  auto* train = app.add_subcommand("train-eval", "train a model over several seeds and write metrics");
  add_common(train, true);
  train->add_option("--runs", f.runs, "number of runs (overrides the config)")->check(CLI::PositiveNumber);
  auto* base = app.add_subcommand("baseline", "kNN or log-feature MLR baseline on a dataset");
  add_common(base, true);
  auto* check = app.add_subcommand("selfcheck", "run the property suite");
  check->add_option("--level", f.level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  check->add_option("--seed", f.seed, "suite seed");
  check->add_option("--out", f.out, "optional JSON report path");
  check->add_option("--inject-fault", f.fault, "deliberately break a kernel (cayley-sign) to test the suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    if (*check) return run_selfcheck(*check, f);
    CLI::App* sub = app.get_subcommands().front();
    const auto config = cli::read_json(f.config);
    const auto ctx = context(*sub, f);
    nlohmann::json summary;
    if (*gen) summary = cli::cmd_gen_radar(config, f.out, ctx);
    if (*emb) summary = cli::cmd_embed_graph(config, f.out, ctx);
    if (*train) summary = cli::cmd_train_eval(config, f.out, ctx);
    if (*base) summary = cli::cmd_baseline(config, f.out, ctx);
    std::cout << summary.dump(2) << "\n";
    return cli::kExitOk;
  } catch (const siegelnet::Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return cli::exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitNumerical;
  }
}
