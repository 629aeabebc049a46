// Runs the default pipeline end to end and prints one PASS/FAIL line per
// acceptance criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "hlsd/pipeline.hpp"

using namespace hlsd;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Run {
  CollectSummary collect;
  TrainManifest manifest;
  TrainSummary train;
  BenchSummary bench;
  double build_seconds = 0.0;
};

Run run_pipeline(const PipelineConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  Run r;
  const auto t0 = std::chrono::steady_clock::now();
  r.collect = cmd_collect(cfg, (dir / "raw.txt").string());
  r.manifest = cmd_hallucinate(cfg, (dir / "raw.txt").string(), (dir / "train.txt").string());
  r.train = cmd_train(cfg, (dir / "train.txt").string(), (dir / "model.bin").string());
  r.build_seconds = seconds_since(t0);
  r.bench = cmd_bench(cfg, (dir / "model.bin").string(), (dir / "bench.txt").string(), dir.string());
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_artifacts");
  fs::create_directories(root);
  const PipelineConfig cfg;

  // 1 and 2: lattice checks on random triples.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const VerifySummary v = cmd_verify(cfg, (root / "verify.txt").string());
    const double secs = seconds_since(t0);
    std::size_t cells = 0, def1_fail = 0;
    for (const auto& s : v.report.sets) {
      cells += s.def1.verdicts.size();
      def1_fail += s.def1.failures();
    }
    std::ostringstream d1;
    d1 << v.report.triples << " triples, " << v.report.sets.size() << " sets, " << cells << " cells, "
       << def1_fail << " minimality failures, containment " << (v.report.containment_ok() ? "ok" : "violated")
       << ", go-through " << (v.report.through_ok() ? "ok" : "violated") << ", injected cell "
       << (v.injected_flagged ? "flagged" : "missed") << ", " << secs << " s";
    report(1,
           v.report.triples >= 20 && v.report.definition1_ok() && v.report.containment_ok() &&
               v.report.through_ok() && v.injected_flagged && secs < 60.0,
           d1.str());
    double worst = 0.0;
    std::size_t near = 0;
    for (const auto& a : v.report.anchors) {
      worst = std::max(worst, a.rel_error());
      near += a.near_c_m;
    }
    std::ostringstream d2;
    d2 << near << "/" << v.report.anchors.size() << " paths pass near c_m, worst length error " << 100.0 * worst
       << "%";
    report(2, v.report.anchors_ok(0.03), d2.str());
  }

  // Full default pipeline.
  std::cout << "running the default pipeline (collect, hallucinate, train, bench)..." << std::endl;
  const Run a = run_pipeline(cfg, root / "run1");

  // 3: envelope soundness on 100 random raw data x 10 samples.
  {
    std::ifstream is(root / "run1" / "raw.txt");
    const RawFile raw = read_raw(is);
    const HallucinationConfig hc = cfg.hallucination();
    Rng pick(derive_seed(cfg.seed, 0xacc3));
    std::size_t inside = 0, outside_env = 0, beams = 0, points = 0;
    for (int k = 0; k < 100 && !raw.data.empty(); ++k) {
      const std::size_t i = pick.below(raw.data.size());
      const RawDatum& d = raw.data[i];
      const HallucinatedSetUnion u = hallucinate_min(d, hc);
      const auto tris = corridor_triangles(u);
      const LidarEnvelope env = envelope(u, hc.lidar, d.c_c);
      Rng rng(derive_seed(cfg.seed, i));
      for (int s = 0; s < 10; ++s) {
        const auto scan = sample_scan(env, std::vector<Action>{d.plan}, hc, rng);
        for (int b = 0; b < hc.lidar.beam_count; ++b) {
          const double r = scan[static_cast<std::size_t>(b)];
          ++beams;
          if (r < env.min[static_cast<std::size_t>(b)] || r > env.max[static_cast<std::size_t>(b)]) ++outside_env;
          if (r >= hc.lidar.max_range) continue;
          ++points;
          const double ang = d.c_c.psi + hc.lidar.beam_angle(b);
          const Point2 p{d.c_c.x + r * std::cos(ang), d.c_c.y + r * std::sin(ang)};
          if (strictly_inside_corridor(p, tris)) ++inside;
        }
      }
    }
    std::ostringstream d;
    d << inside << " of " << points << " obstacle points inside the corridor, " << beams - outside_env << "/" << beams
      << " beams within [min, max]";
    report(3, !raw.data.empty() && inside == 0 && outside_env == 0, d.str());
  }

  // 4: cardinality and manifest.
  {
    const std::string man = slurp(root / "run1" / "train.txt.manifest");
    const bool recorded = man.find("sampling_count = 10\n") != std::string::npos &&
                          man.find("alpha = 0.48\n") != std::string::npos;
    std::ostringstream d;
    d << "|D_raw| " << a.manifest.raw_count << ", |D_train| " << a.manifest.train_count << ", manifest "
      << (recorded ? "records" : "lacks") << " sampling_count 10 and alpha 0.48";
    report(4, a.manifest.raw_count > 0 && a.manifest.train_count == 12 * a.manifest.raw_count && recorded, d.str());
  }

  // 5: offset endpoints and monotonicity.
  {
    bool mono = true;
    double prev = offset(0.0);
    for (int k = 1; k <= 1500; ++k) {
      const double o = offset(k * 1e-3);
      mono = mono && o >= prev;
      prev = o;
    }
    std::ostringstream d;
    d << "offset(0.3) = " << offset(0.3) << ", offset(1.0) = " << offset(1.0) << ", monotone "
      << (mono ? "yes" : "no");
    report(5, offset(0.3) == 0.0 && offset(1.0) == 1.0 && mono, d.str());
  }

  // 6: gradient check, loss reduction, output limits.
  {
    std::ifstream ms(root / "run1" / "model.bin", std::ios::binary);
    const Mlp<float> model = load_model<float>(ms);
    std::ifstream ts(root / "run1" / "train.txt");
    const auto data = read_train(ts);
    const Dataset ds = make_dataset(data, cfg.lidar_max_range);
    std::vector<double> x(static_cast<std::size_t>(ds.X.rows()));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = ds.X(static_cast<Eigen::Index>(i), 0);
    const Action label{ds.Y(0, 0), ds.Y(1, 0)};
    const GradientCheckResult gc = gradient_check(model.cast<double>(), x, label, cfg.seed, 0.01, 1e-5);
    const double ratio = a.train.losses.empty() ? 1.0 : a.train.losses.back() / a.train.initial_loss;
    // Every action the model emits on the training inputs and in the benchmark.
    bool bounded = true;
    for (Eigen::Index c = 0; c < ds.size(); c += 4096) {
      const Eigen::Index n = std::min<Eigen::Index>(4096, ds.size() - c);
      const Eigen::MatrixXf o = model.raw(ds.X.middleCols(c, n));
      for (Eigen::Index j = 0; j < n; ++j) {
        const Action act = model.squash(o(0, j), o(1, j));
        bounded = bounded && act.v >= 0.0 && act.v <= 1.0 && std::abs(act.w) <= 1.57;
      }
    }
    for (const auto& e : a.bench.episodes) {
      for (std::size_t k = 1; k < e.result.path.size(); ++k) {
        // Recovery actions are bounded by construction; check the executed motion.
        const double dpsi = std::abs(wrap_angle(e.result.path[k].psi - e.result.path[k - 1].psi)) / cfg.deploy.dt;
        const double dist = distance(e.result.path[k].position(), e.result.path[k - 1].position()) / cfg.deploy.dt;
        bounded = bounded && dist <= 1.0 + 1e-9 && dpsi <= 1.57 + 1e-9;
      }
    }
    std::ostringstream d;
    d << "gradient check max rel error " << gc.max_rel_error << " over " << gc.checked << " coordinates, loss "
      << a.train.initial_loss << " -> " << (a.train.losses.empty() ? 0.0 : a.train.losses.back()) << " (ratio "
      << ratio << ", need < 0.1), actions " << (bounded ? "within limits" : "out of limits");
    report(6, gc.max_rel_error < 1e-4 && ratio < 0.1 && bounded, d.str());
  }

  // 7: desk benchmark.
  {
    const BenchSummary& s = a.bench;
    std::ostringstream d;
    d << "raw " << a.collect.count << ", train " << a.manifest.train_count << ", build " << a.build_seconds
      << " s; " << s.successes << "/" << s.episodes.size() << " successes (" << 100.0 * s.success_rate()
      << "%), easy " << s.easy_successes << "/" << s.easy << " (" << 100.0 * s.easy_rate() << "%), collisions "
      << s.collisions << ", mean time " << s.mean_time << " s";
    report(7,
           s.collisions == 0 && s.easy > 0 && s.easy_rate() >= 0.9 && s.success_rate() >= 0.5 && s.successes > 0 &&
               s.mean_time * 2.0 <= cfg.deploy.time_cap && a.build_seconds < 600.0,
           d.str());
  }

  // 8: rerun and compare bytes.
  {
    std::cout << "rerunning the pipeline for the determinism check..." << std::endl;
    run_pipeline(cfg, root / "run2");
    std::string diff;
    for (const char* f : {"raw.txt", "train.txt", "train.txt.manifest", "model.bin", "model.bin.loss", "bench.txt",
                          "bench.txt.summary"}) {
      if (slurp(root / "run1" / f) != slurp(root / "run2" / f)) diff += std::string(diff.empty() ? "" : ", ") + f;
    }
    report(8, diff.empty(), diff.empty() ? "datasets, model and episode records byte-identical" : "differ: " + diff);
  }

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
