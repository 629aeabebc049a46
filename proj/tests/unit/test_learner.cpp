#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hlsd/mlp.hpp"

using namespace hlsd;

namespace {

// Plain-loop reference forward pass.
Action reference_forward(const Mlp<double>& m, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (int l = 0; l < 3; ++l) {
    std::vector<double> z(static_cast<std::size_t>(m.W[l].rows()));
    for (Eigen::Index i = 0; i < m.W[l].rows(); ++i) {
      double s = m.b[l](i);
      for (Eigen::Index j = 0; j < m.W[l].cols(); ++j) s += m.W[l](i, j) * a[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = l < 2 ? std::max(0.0, s) : s;
    }
    a = z;
  }
  return {m.scale.v_max / (1.0 + std::exp(-a[0])), m.scale.w_max * std::tanh(a[1])};
}

std::vector<TrainDatum> synthetic(int n, int beams, std::uint64_t seed) {
  // The label is a smooth function of the scan and goal.
  Rng rng(seed);
  std::vector<TrainDatum> out;
  for (int k = 0; k < n; ++k) {
    TrainDatum d;
    d.scan.resize(static_cast<std::size_t>(beams));
    for (auto& r : d.scan) r = rng.uniform(0.0, 1.0);
    d.c_g = {rng.uniform(-1, 1), rng.uniform(-1, 1), 0};
    const double v = 0.2 + 0.6 * d.scan[0];
    const double w = 0.8 * std::tanh(d.c_g.y - d.scan[1] + 0.5);
    d.plan = {Action{v, w}};
    out.push_back(d);
  }
  return out;
}

}  // namespace

TEST(EncodeInput, NormalizesAndRotatesGoal) {
  const auto x = encode_input({0.5, 2.0, -1.0}, {1, 1, M_PI / 2}, {1, 2, 0}, 1.0);
  ASSERT_EQ(x.size(), 5u);
  EXPECT_EQ(x[0], 0.5);
  EXPECT_EQ(x[1], 1.0);
  EXPECT_EQ(x[2], 0.0);
  EXPECT_NEAR(x[3], 1.0, 1e-12);  // goal straight ahead
  EXPECT_NEAR(x[4], 0.0, 1e-12);
  const auto y = encode_input({4.0}, {0, 0, 0}, {0, 3, 0}, 8.0);
  EXPECT_EQ(y[0], 0.5);
  EXPECT_NEAR(y[2], 3.0, 1e-12);
}

TEST(Mlp, ShapesAndParameterCount) {
  const auto m = Mlp<float>::init(722, 256, 1);
  EXPECT_EQ(m.input_dim(), 722);
  EXPECT_EQ(m.hidden_dim(), 256);
  EXPECT_EQ(m.parameter_count(), 722u * 256 + 256 + 256 * 256 + 256 + 256 * 2 + 2);
  EXPECT_TRUE(m.finite());
}

TEST(Mlp, InitIsBoundedAndSeeded) {
  const auto a = Mlp<double>::init(30, 16, 3), b = Mlp<double>::init(30, 16, 3), c = Mlp<double>::init(30, 16, 4);
  EXPECT_EQ(a.W[0], b.W[0]);
  EXPECT_NE(a.W[0], c.W[0]);
  EXPECT_LE(a.W[0].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(30.0));
  EXPECT_LE(a.W[1].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(16.0));
}

TEST(Mlp, ForwardMatchesReferenceAndBounds) {
  auto m = Mlp<double>::init(12, 9, 5);
  m.scale = {1.0, 1.57};
  Rng rng(6);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(12);
    for (auto& v : x) v = rng.uniform(-3, 3);
    const Action a = m.forward(x), r = reference_forward(m, x);
    EXPECT_NEAR(a.v, r.v, 1e-12);
    EXPECT_NEAR(a.w, r.w, 1e-12);
    EXPECT_GE(a.v, 0.0);
    EXPECT_LE(a.v, 1.0);
    EXPECT_LE(std::abs(a.w), 1.57);
  }
  EXPECT_THROW(m.forward(std::vector<double>(11)), std::invalid_argument);
}

TEST(Mlp, FloatAndDoubleAgree) {
  const auto d = Mlp<double>::init(722, 64, 7);
  const auto f = d.cast<float>();
  Rng rng(8);
  std::vector<double> x(722);
  for (auto& v : x) v = rng.uniform();
  const Action a = d.forward(x), b = f.forward(x);
  EXPECT_NEAR(a.v, b.v, 1e-5);
  EXPECT_NEAR(a.w, b.w, 1e-5);
}

TEST(Gradient, MatchesCentralDifferences) {
  auto m = Mlp<double>::init(20, 12, 9);
  Rng rng(10);
  std::vector<double> x(20);
  for (auto& v : x) v = rng.uniform();
  const GradientCheckResult r = gradient_check(m, x, {0.4, -0.3}, 1, 1.0);
  EXPECT_EQ(r.checked, m.parameter_count());
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(Gradient, BatchLossIsMeanOfSquaredErrors) {
  auto m = Mlp<double>::init(4, 5, 11);
  Mlp<double>::Mat X(4, 3), Y(2, 3);
  X.setRandom();
  Y << 0.1, 0.5, 0.9, -0.2, 0.0, 1.0;
  double ref = 0.0;
  for (int j = 0; j < 3; ++j) {
    const Action a = reference_forward(m, {X(0, j), X(1, j), X(2, j), X(3, j)});
    ref += (a.v - Y(0, j)) * (a.v - Y(0, j)) + (a.w - Y(1, j)) * (a.w - Y(1, j));
  }
  EXPECT_NEAR(loss_and_gradient<double>(m, X, Y, nullptr), ref / 6.0, 1e-12);
}

TEST(Train, SgdMomentumReducesLoss) {
  const Dataset ds = make_dataset(synthetic(512, 10, 1));
  TrainConfig cfg;
  cfg.hidden = 32;
  cfg.batch = 32;
  cfg.epochs = 30;
  cfg.lr = 0.05;
  cfg.halve_every = 10;
  const TrainResult r = train(ds, cfg);
  ASSERT_EQ(r.losses.size(), 30u);
  EXPECT_LT(r.losses.back(), 0.5 * r.initial_loss);
  EXPECT_TRUE(r.model.finite());
}

TEST(Train, AdamReducesLoss) {
  const Dataset ds = make_dataset(synthetic(512, 10, 2));
  TrainConfig cfg;
  cfg.optimizer = Optimizer::adam;
  cfg.hidden = 32;
  cfg.batch = 32;
  cfg.epochs = 20;
  const TrainResult r = train(ds, cfg);
  EXPECT_LT(r.losses.back(), 0.5 * r.initial_loss);
}

TEST(Train, SameSeedSameModel) {
  const Dataset ds = make_dataset(synthetic(200, 6, 3));
  TrainConfig cfg;
  cfg.hidden = 16;
  cfg.batch = 16;
  cfg.epochs = 3;
  const TrainResult a = train(ds, cfg), b = train(ds, cfg);
  EXPECT_EQ(a.losses, b.losses);
  for (int l = 0; l < 3; ++l) EXPECT_EQ(a.model.W[l], b.model.W[l]);
  cfg.seed = 2;
  EXPECT_NE(train(ds, cfg).losses, a.losses);
}

TEST(Train, RejectsBadConfig) {
  const Dataset ds = make_dataset(synthetic(10, 4, 4));
  TrainConfig cfg;
  cfg.lr = 0.0;
  EXPECT_THROW(train(ds, cfg), std::invalid_argument);
  cfg = {};
  cfg.momentum = 1.0;
  EXPECT_THROW(train(ds, cfg), std::invalid_argument);
  cfg = {};
  cfg.batch = 0;
  EXPECT_THROW(train(ds, cfg), std::invalid_argument);
}

TEST(Train, DivergenceIsReported) {
  const Dataset ds = make_dataset(synthetic(64, 4, 5));
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg.batch = 8;
  cfg.epochs = 5;
  cfg.lr = 1e30;
  EXPECT_THROW(train(ds, cfg), std::runtime_error);
}

TEST(MakeDataset, RejectsRaggedAndEmpty) {
  auto data = synthetic(3, 4, 6);
  data[1].scan.pop_back();
  EXPECT_THROW(make_dataset(data), std::invalid_argument);
  EXPECT_THROW(make_dataset({}), std::invalid_argument);
}

TEST(ModelIo, RoundTripIsBitExact) {
  auto m = Mlp<float>::init(14, 7, 12);
  m.scale = {0.9, 1.2};
  std::ostringstream os;
  save_model(os, m);
  std::istringstream is(os.str());
  const auto back = load_model<float>(is);
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(back.W[l], m.W[l]);
    EXPECT_EQ(back.b[l], m.b[l]);
  }
  EXPECT_EQ(back.scale.v_max, 0.9);
  std::ostringstream again;
  save_model(again, back);
  EXPECT_EQ(again.str(), os.str());
}

TEST(ModelIo, RejectsCorruption) {
  auto m = Mlp<float>::init(6, 4, 13);
  std::ostringstream os;
  save_model(os, m);
  std::string bytes = os.str();
  bytes[40] ^= 0x1;
  std::istringstream flipped(bytes);
  EXPECT_THROW(load_model<float>(flipped), std::runtime_error);
  std::istringstream truncated(os.str().substr(0, 30));
  EXPECT_THROW(load_model<float>(truncated), std::runtime_error);
  std::istringstream garbage("not a model at all");
  EXPECT_THROW(load_model<float>(garbage), std::runtime_error);
  std::istringstream wrong_width(os.str());
  EXPECT_THROW(load_model<double>(wrong_width), std::runtime_error);
}
