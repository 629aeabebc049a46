#pragma once

// The pipeline stages behind the CLI subcommands. Each reads and writes the
// owning module's file formats; all randomness flows from the config seed.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hlsd/config.hpp"
#include "hlsd/exploration.hpp"
#include "hlsd/hallucination.hpp"
#include "hlsd/mlp.hpp"
#include "hlsd/simworld.hpp"
#include "hlsd/theorem_check.hpp"

namespace hlsd {

namespace detail {

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary | std::ios::out | std::ios::trunc : std::ios::out | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream is(path, binary ? std::ios::binary | std::ios::in : std::ios::in);
  if (!is) throw std::runtime_error("cannot read " + path);
  return is;
}

inline void close_checked(std::ofstream& os, const std::string& path) {
  os.close();
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline unsigned worker_count(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace detail

struct CollectSummary {
  std::size_t count = 0;
  std::size_t dropped = 0;
  bool too_short = false;
};

inline CollectSummary cmd_collect(const PipelineConfig& cfg, const std::string& out_path) {
  const ExplorationConfig ec = cfg.exploration();
  RandomPolicy policy(ec, cfg.seed);
  CollectResult r = collect_raw(policy, cfg.duration, ec);
  if (r.too_short)
    std::cerr << "warning: duration " << cfg.duration << " s is shorter than the " << ec.window
              << " s goal window; dataset is empty\n";
  auto os = detail::open_out(out_path);
  write_raw(os, r.data, cfg.seed, ec.dt);
  detail::close_checked(os, out_path);
  return {r.data.size(), r.dropped, r.too_short};
}

inline std::string manifest_path(const std::string& train_path) { return train_path + ".manifest"; }

inline TrainManifest cmd_hallucinate(const PipelineConfig& cfg, const std::string& raw_path,
                                     const std::string& out_path) {
  auto is = detail::open_in(raw_path);
  const RawFile raw = read_raw(is);
  const HallucinationConfig hc = cfg.hallucination();
  TrainManifest m;
  m.seed = cfg.seed;
  m.alpha = hc.alpha;
  m.sampling_count = hc.sampling_count;
  m.delta_max = hc.delta_max;
  m.robot_width = hc.robot_width;
  m.raw_count = raw.data.size();
  std::vector<TrainDatum> train;
  if (!raw.data.empty())
    train = augment_dataset(raw.data, hc, cfg.seed, &m.stats, detail::worker_count(cfg.bench.threads));
  m.train_count = train.size();
  auto os = detail::open_out(out_path);
  write_train(os, train);
  detail::close_checked(os, out_path);
  auto ms = detail::open_out(manifest_path(out_path));
  write_manifest(ms, m);
  detail::close_checked(ms, manifest_path(out_path));
  return m;
}

inline std::string loss_path(const std::string& model_path) { return model_path + ".loss"; }

struct TrainSummary {
  double initial_loss = 0.0;
  std::vector<double> losses;
  double seconds = 0.0;
  std::size_t samples = 0;
};

inline TrainSummary cmd_train(const PipelineConfig& cfg, const std::string& train_path, const std::string& model_path) {
  Dataset ds;
  {
    auto is = detail::open_in(train_path);
    const auto data = read_train(is);
    if (data.empty()) throw std::runtime_error("train: " + train_path + " holds no data");
    ds = make_dataset(data, cfg.lidar_max_range);
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, cfg.train.seed);  // --seed reaches the initialization too
  TrainResult r = train(ds, tc, cfg.output_scale());
  TrainSummary s;
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  s.initial_loss = r.initial_loss;
  s.losses = r.losses;
  s.samples = static_cast<std::size_t>(ds.size());
  auto os = detail::open_out(model_path, true);
  save_model(os, r.model);
  detail::close_checked(os, model_path);
  auto ls = detail::open_out(loss_path(model_path));
  std::string text = "epoch loss\n0 ";
  textio::put(text, r.initial_loss);
  text += '\n';
  for (std::size_t e = 0; e < r.losses.size(); ++e) {
    textio::put(text, static_cast<std::uint64_t>(e + 1));
    text += ' ';
    textio::put(text, r.losses[e]);
    text += '\n';
  }
  ls << text;
  detail::close_checked(ls, loss_path(model_path));
  return s;
}

struct BenchEpisode {
  int world = 0;
  int trial = 0;
  std::uint64_t world_seed = 0;
  double fill_prob = 0.0;
  double difficulty = 0.0;
  EpisodeResult result;
};

struct BenchSummary {
  std::vector<BenchEpisode> episodes;
  std::size_t successes = 0;
  std::size_t easy = 0;            // episodes on worlds with fill_prob <= easy_fill
  std::size_t easy_successes = 0;
  std::size_t collisions = 0;
  double mean_time = 0.0;          // over successes
  double std_time = 0.0;
  double max_time = 0.0;           // over all episodes
  static constexpr double easy_fill = 0.1;

  double success_rate() const { return episodes.empty() ? 0.0 : double(successes) / double(episodes.size()); }
  double easy_rate() const { return easy == 0 ? 0.0 : double(easy_successes) / double(easy); }
};

inline std::uint64_t bench_world_seed(std::uint64_t seed, int world) {
  return derive_seed(derive_seed(seed, 0xbe7c4), static_cast<std::uint64_t>(world));
}

inline double bench_fill(const BenchConfig& b, int world) {
  if (b.worlds == 1) return b.fill_min;
  return b.fill_min + (b.fill_max - b.fill_min) * world / (b.worlds - 1);
}

// Runs worlds x trials episodes over a worker pool. Results land in fixed
// slots, so the output does not depend on scheduling.
inline BenchSummary run_bench(const PipelineConfig& cfg, const Mlp<float>& model) {
  const BenchConfig& b = cfg.bench;
  const DeploymentConfig dc = cfg.deployment();
  std::vector<OccupancyGrid> worlds(static_cast<std::size_t>(b.worlds));
  std::vector<double> difficulty(worlds.size());
  BenchSummary s;
  s.episodes.resize(static_cast<std::size_t>(b.worlds) * b.trials);
  for (int i = 0; i < b.worlds; ++i) {
    WorldConfig wc = cfg.worlds();
    wc.fill_prob = bench_fill(b, i);
    worlds[static_cast<std::size_t>(i)] = generate_world(bench_world_seed(cfg.seed, i), wc);
  }
  std::atomic<std::size_t> next{0};
  const std::size_t total = s.episodes.size() + worlds.size();
  auto work = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      if (k >= s.episodes.size()) {
        const std::size_t w = k - s.episodes.size();
        difficulty[w] = difficulty_proxy(worlds[w]);
        continue;
      }
      BenchEpisode& e = s.episodes[k];
      e.world = static_cast<int>(k / static_cast<std::size_t>(b.trials));
      e.trial = static_cast<int>(k % static_cast<std::size_t>(b.trials));
      e.world_seed = bench_world_seed(cfg.seed, e.world);
      e.fill_prob = bench_fill(b, e.world);
      const OccupancyGrid& g = worlds[static_cast<std::size_t>(e.world)];
      Rng jitter(derive_seed(e.world_seed, 0x7a1 + static_cast<std::uint64_t>(e.trial)));
      Pose start = g.start;
      start.psi = wrap_angle(start.psi + jitter.uniform(-b.heading_jitter, b.heading_jitter));
      e.result = run_episode(g, model, dc, start);
    }
  };
  const unsigned n = std::min<unsigned>(detail::worker_count(b.threads), static_cast<unsigned>(total));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<double> times;
  for (auto& e : s.episodes) {
    e.difficulty = difficulty[static_cast<std::size_t>(e.world)];
    const bool ok = e.result.outcome == Outcome::success;
    s.collisions += e.result.collision_count;
    s.max_time = std::max(s.max_time, e.result.traversal_time);
    if (ok) {
      ++s.successes;
      times.push_back(e.result.traversal_time);
    }
    if (e.fill_prob <= BenchSummary::easy_fill + 1e-12) {
      ++s.easy;
      if (ok) ++s.easy_successes;
    }
  }
  if (!times.empty()) {
    double sum = 0.0;
    for (double t : times) sum += t;
    s.mean_time = sum / double(times.size());
    double var = 0.0;
    for (double t : times) var += (t - s.mean_time) * (t - s.mean_time);
    s.std_time = times.size() > 1 ? std::sqrt(var / double(times.size() - 1)) : 0.0;
  }
  return s;
}

inline std::string summary_path(const std::string& report_path) { return report_path + ".summary"; }

inline std::string bench_records(const BenchSummary& s) {
  std::string out;
  for (const auto& e : s.episodes)
    out += episode_record(e.world_seed, e.world, e.trial, e.fill_prob, e.difficulty, e.result);
  return out;
}

inline std::string bench_summary_text(const BenchSummary& s) {
  std::string out;
  auto kv = [&](const char* k, double v, int decimals) {
    out += k;
    out += " = ";
    textio::put_fixed(out, v, decimals);
    out += '\n';
  };
  kv("episodes", double(s.episodes.size()), 0);
  kv("successes", double(s.successes), 0);
  kv("success_rate", s.success_rate(), 4);
  kv("easy_episodes", double(s.easy), 0);
  kv("easy_successes", double(s.easy_successes), 0);
  kv("easy_success_rate", s.easy_rate(), 4);
  kv("collisions", double(s.collisions), 0);
  kv("mean_time", s.mean_time, 3);
  kv("std_time", s.std_time, 3);
  kv("max_time", s.max_time, 3);
  return out;
}

// artifacts_dir, when set, receives one world file and one SVG overlay per world.
inline BenchSummary cmd_bench(const PipelineConfig& cfg, const std::string& model_path, const std::string& report_path,
                              const std::string& artifacts_dir = "") {
  Mlp<float> model;
  {
    auto is = detail::open_in(model_path, true);
    model = load_model<float>(is);
  }
  if (model.input_dim() != cfg.lidar_beams + kGoalFeatures)
    throw std::runtime_error("bench: model input size does not match lidar.beams");
  BenchSummary s = run_bench(cfg, model);
  auto os = detail::open_out(report_path);
  os << bench_records(s);
  detail::close_checked(os, report_path);
  auto ss = detail::open_out(summary_path(report_path));
  ss << bench_summary_text(s);
  detail::close_checked(ss, summary_path(report_path));
  if (!artifacts_dir.empty()) {
    for (int w = 0; w < cfg.bench.worlds; ++w) {
      WorldConfig wc = cfg.worlds();
      wc.fill_prob = bench_fill(cfg.bench, w);
      const OccupancyGrid g = generate_world(bench_world_seed(cfg.seed, w), wc);
      const std::string stem = artifacts_dir + "/world" + std::to_string(w);
      auto wf = detail::open_out(stem + ".txt");
      write_world(wf, g);
      detail::close_checked(wf, stem + ".txt");
      std::vector<std::vector<Pose>> paths;
      for (const auto& e : s.episodes)
        if (e.world == w) paths.push_back(e.result.path);
      auto sv = detail::open_out(stem + ".svg");
      write_svg(sv, g, paths);
      detail::close_checked(sv, stem + ".svg");
    }
  }
  return s;
}

struct VerifySummary {
  TheoremReport report;
  bool injected_flagged = false;
  bool passed() const {
    return report.definition1_ok() && report.containment_ok() && report.through_ok() && report.anchors_ok() &&
           injected_flagged;
  }
};

// Adds one cell 4 cells beyond c_m (away from the chord) to a representative
// set. The containment check has to flag exactly that cell.
inline bool injected_cell_flagged(std::uint64_t seed, double resolution) {
  Rng rng(derive_seed(seed, 0x1a7));
  const LatticeTriple lt = sample_lattice_triple(rng, resolution);
  std::vector<Cell> cells = rasterize_segment(lt.world, representative_min_set(lt.triple));
  const Point2 mid = 0.5 * (lt.triple.c_c() + lt.triple.c_g());
  const Point2 dir = lt.triple.c_m() - mid;
  const Point2 away = lt.triple.c_m() + (4.0 * resolution / norm(dir)) * dir;
  const Cell injected = lt.world.cell_of(away);
  cells.push_back(injected);
  const double diag = resolution * std::sqrt(2.0);
  std::size_t outside = 0;
  bool hit = false;
  for (Cell c : cells) {
    if (in_region_G_within(lt.world.center(c), lt.triple, diag)) continue;
    ++outside;
    hit = hit || c == injected;
  }
  return outside == 1 && hit;
}

inline VerifySummary cmd_verify(const PipelineConfig& cfg, const std::string& report_path) {
  VerifySummary v;
  v.report = run_theorem_check(cfg.seed, cfg.verify.triples, cfg.verify.resolution);
  v.injected_flagged = injected_cell_flagged(cfg.seed, cfg.verify.resolution);
  auto os = detail::open_out(report_path);
  write_theorem_report(os, v.report);
  os << "injected_out_of_g " << (v.injected_flagged ? "flagged" : "missed") << '\n';
  os << "verdict " << (v.passed() ? "pass" : "fail") << '\n';
  detail::close_checked(os, report_path);
  return v;
}

}  // namespace hlsd
