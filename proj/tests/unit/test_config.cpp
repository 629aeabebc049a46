#include <gtest/gtest.h>

#include <sstream>

#include "hlsd/config.hpp"

using namespace hlsd;

namespace {

PipelineConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const PipelineConfig c = parse("# nothing\n\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.duration, 505.0);
  EXPECT_EQ(c.halluc.alpha, 0.48);
  EXPECT_EQ(c.halluc.sampling_count, 10);
  EXPECT_EQ(c.train.hidden, 256);
  EXPECT_EQ(c.bench.worlds, 30);
}

TEST(Config, ParsesValuesAndComments) {
  const PipelineConfig c = parse(
      "pipeline.seed = 11  # trailing comment\n"
      "  hallucinate.alpha=0.25\n"
      "train.optimizer = adam\n"
      "world.size = 50\n");
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.halluc.alpha, 0.25);
  EXPECT_EQ(c.train.optimizer, Optimizer::adam);
  EXPECT_EQ(c.world.size, 50);
}

TEST(Config, DumpParsesBackToTheSameText) {
  PipelineConfig c;
  c.seed = 99;
  c.halluc.alpha = 0.125;
  c.deploy.time_cap = 33.5;
  c.train.optimizer = Optimizer::adam;
  std::ostringstream a;
  dump_config(a, c);
  std::istringstream is(a.str());
  const PipelineConfig back = parse_config(is);
  std::ostringstream b;
  dump_config(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(back.deploy.time_cap, 33.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("pipeline.nope = 1\n"), ConfigError);
  EXPECT_THROW(parse("pipeline.seed = 1\npipeline.seed = 2\n"), ConfigError);
  EXPECT_THROW(parse("pipeline.seed 1\n"), ConfigError);
  EXPECT_THROW(parse("pipeline.seed = one\n"), ConfigError);
  EXPECT_THROW(parse("pipeline.seed = 1 2\n"), ConfigError);
  EXPECT_THROW(parse("train.optimizer = rmsprop\n"), ConfigError);
}

TEST(Config, RangeChecks) {
  EXPECT_THROW(parse("hallucinate.alpha = 0.6\n"), ConfigError);
  EXPECT_THROW(parse("hallucinate.alpha = -0.1\n"), ConfigError);
  EXPECT_NO_THROW(parse("hallucinate.alpha = 0.5\n"));
  EXPECT_THROW(parse("hallucinate.sampling_count = 0\n"), ConfigError);
  EXPECT_THROW(parse("train.lr = 0\n"), ConfigError);
  EXPECT_THROW(parse("train.momentum = 1\n"), ConfigError);
  EXPECT_THROW(parse("world.size = 10\n"), ConfigError);
  EXPECT_THROW(parse("world.fill_prob = 1.1\n"), ConfigError);
  EXPECT_THROW(parse("deploy.backup_speed = 0.2\n"), ConfigError);
  EXPECT_THROW(parse("bench.fill_min = 0.5\nbench.fill_max = 0.4\n"), ConfigError);
  EXPECT_THROW(parse("lidar.beams = 1\n"), ConfigError);
  EXPECT_THROW(parse("explore.keep_prob = 2\n"), ConfigError);
}

TEST(Config, DerivedModuleConfigsShareTopLevelValues) {
  const PipelineConfig c = parse("robot.width = 0.5\nlidar.beams = 360\nexplore.dt = 0.1\n");
  EXPECT_EQ(c.exploration().robot_width, 0.5);
  EXPECT_EQ(c.hallucination().robot_width, 0.5);
  EXPECT_EQ(c.hallucination().dt, 0.1);
  EXPECT_EQ(c.hallucination().lidar.beam_count, 360);
  EXPECT_EQ(c.deployment().lidar.beam_count, 360);
  EXPECT_EQ(c.deployment().planner.lethal_radius, 0.25);
  EXPECT_EQ(c.worlds().robot.width, 0.5);
  EXPECT_NEAR(c.lidar().fov, 1.5 * M_PI, 1e-12);
}
