// hlsd: collect -> hallucinate -> train -> bench, plus the geometry verifier.
//
// Exit codes: 0 ok, 1 bad arguments or config, 2 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hlsd/config.hpp"
#include "hlsd/pipeline.hpp"

namespace {

struct Shared {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

hlsd::PipelineConfig load(const Shared& s) {
  hlsd::PipelineConfig cfg;
  if (!s.config_path.empty()) {
    std::ifstream is(s.config_path);
    if (!is) throw hlsd::ConfigError("cannot read config " + s.config_path);
    cfg = hlsd::parse_config(is);
  }
  if (s.seed) cfg.seed = *s.seed;
  hlsd::validate(cfg);
  return cfg;
}

void add_shared(CLI::App* sub, Shared& s, const std::string& out_help) {
  sub->add_option("--config", s.config_path, "key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", s.seed, "overrides pipeline.seed");
  sub->add_option("--out", s.out, out_help)->required();
}

void print_train(const hlsd::TrainSummary& t) {
  std::cout << "samples " << t.samples << " initial_loss " << t.initial_loss << " final_loss "
            << (t.losses.empty() ? t.initial_loss : t.losses.back()) << " seconds " << t.seconds << '\n';
}

void print_bench(const hlsd::BenchSummary& b) { std::cout << hlsd::bench_summary_text(b); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hallucinated learning and sober deployment pipeline"};
  app.require_subcommand(1);
  Shared shared;
  std::string raw_path, train_path, model_path, artifacts;
  std::optional<int> worlds, threads;

  auto* collect = app.add_subcommand("collect", "roll out the random policy in open space");
  add_shared(collect, shared, "raw dataset file");

  auto* halluc = app.add_subcommand("hallucinate", "augment raw data with hallucinated scans");
  add_shared(halluc, shared, "training dataset file (manifest written next to it)");
  halluc->add_option("--raw", raw_path, "raw dataset")->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "fit the local planner");
  add_shared(train, shared, "model file (loss curve written next to it)");
  train->add_option("--data", train_path, "training dataset")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "deploy the planner over generated worlds");
  add_shared(bench, shared, "episode records (summary written next to it)");
  bench->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  bench->add_option("--worlds", worlds, "number of worlds")->check(CLI::PositiveNumber);
  bench->add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  bench->add_option("--artifacts", artifacts, "directory for world files and SVG overlays");

  auto* verify = app.add_subcommand("verify", "check the minimal-obstacle geometry against the lattice oracle");
  add_shared(verify, shared, "verification report");

  auto* all = app.add_subcommand("all", "collect, hallucinate, train and bench into one directory");
  add_shared(all, shared, "output directory");
  all->add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

  auto* dump = app.add_subcommand("config", "write the effective config");
  add_shared(dump, shared, "config file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    hlsd::PipelineConfig cfg = load(shared);
    if (worlds) cfg.bench.worlds = *worlds;
    if (threads) cfg.bench.threads = *threads;
    hlsd::validate(cfg);

    if (*collect) {
      const auto r = hlsd::cmd_collect(cfg, shared.out);
      std::cout << "raw " << r.count << " dropped " << r.dropped << '\n';
    } else if (*halluc) {
      const auto m = hlsd::cmd_hallucinate(cfg, raw_path, shared.out);
      std::cout << "raw " << m.raw_count << " train " << m.train_count << " alpha " << m.alpha << " sampling_count "
                << m.sampling_count << '\n';
    } else if (*train) {
      print_train(hlsd::cmd_train(cfg, train_path, shared.out));
    } else if (*bench) {
      if (!artifacts.empty()) std::filesystem::create_directories(artifacts);
      print_bench(hlsd::cmd_bench(cfg, model_path, shared.out, artifacts));
    } else if (*verify) {
      const auto v = hlsd::cmd_verify(cfg, shared.out);
      std::cout << "triples " << v.report.triples << " sets " << v.report.sets.size() << " verdict "
                << (v.passed() ? "pass" : "fail") << '\n';
      if (!v.passed()) return 2;
    } else if (*all) {
      const std::filesystem::path dir(shared.out);
      std::filesystem::create_directories(dir / "worlds");
      {
        std::ofstream os(dir / "config.txt");
        hlsd::dump_config(os, cfg);
      }
      const auto r = hlsd::cmd_collect(cfg, (dir / "raw.txt").string());
      std::cout << "raw " << r.count << '\n';
      const auto m = hlsd::cmd_hallucinate(cfg, (dir / "raw.txt").string(), (dir / "train.txt").string());
      std::cout << "train " << m.train_count << '\n';
      print_train(hlsd::cmd_train(cfg, (dir / "train.txt").string(), (dir / "model.bin").string()));
      print_bench(hlsd::cmd_bench(cfg, (dir / "model.bin").string(), (dir / "episodes.txt").string(),
                                  (dir / "worlds").string()));
    } else if (*dump) {
      std::ofstream os(shared.out);
      if (!os) throw std::runtime_error("cannot write " + shared.out);
      hlsd::dump_config(os, cfg);
    }
  } catch (const hlsd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
