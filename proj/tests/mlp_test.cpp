#include "lrad/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

namespace {

using lrad::Activation;
using lrad::MlpArch;
using lrad::MlpParams;
using lrad::RngStream;
using lrad::StreamTag;
using lrad::Vector;

MlpParams zero_net(const MlpArch& arch) {
  return lrad::unflatten_params(arch, Vector(static_cast<std::size_t>(arch.param_count()), 0.0));
}

TEST(MlpInit, DeterministicAndBounded) {
  const MlpArch arch{{1, 1}, Activation::relu};
  RngStream a(100, StreamTag::param_init, 0, 0);
  RngStream b(100, StreamTag::param_init, 0, 0);
  const MlpParams pa = lrad::mlp_init(arch, a);
  const MlpParams pb = lrad::mlp_init(arch, b);
  EXPECT_EQ(pa.weights[0](0, 0), pb.weights[0](0, 0));
  EXPECT_EQ(pa.biases[0][0], pb.biases[0][0]);

  const MlpArch wide{{9, 16, 1}, Activation::relu};
  RngStream c(5, StreamTag::param_init, 0, 0);
  const MlpParams pc = lrad::mlp_init(wide, c);
  for (int l = 0; l < wide.layer_count(); ++l) {
    const double s = 1.0 / std::sqrt(static_cast<double>(wide.widths[l]));
    for (double v : pc.weights[l].a) ASSERT_LE(std::abs(v), s);
    for (double v : pc.biases[l]) ASSERT_LE(std::abs(v), s);
  }

  RngStream d(6, StreamTag::param_init, 0, 0);
  const MlpParams pd = lrad::mlp_init(wide, d);
  EXPECT_NE(pc.weights[0](0, 0), pd.weights[0](0, 0));
}

TEST(MlpForward, ZeroNetworkOutputsZero) {
  const MlpArch arch{{3, 4, 1}, Activation::relu};
  EXPECT_EQ(lrad::mlp_forward(zero_net(arch), {0.5, -1.0, 2.0})[0], 0.0);
}

TEST(MlpForward, SingleLinearLayerIsAffine) {
  const MlpArch arch{{3, 1}, Activation::relu};
  MlpParams p = zero_net(arch);
  p.weights[0](0, 0) = 0.5;
  p.weights[0](0, 1) = -1.5;
  p.weights[0](0, 2) = 2.0;
  p.biases[0][0] = 0.25;
  const Vector x{1.0, 2.0, -1.0};
  EXPECT_DOUBLE_EQ(lrad::mlp_forward(p, x)[0], 0.5 - 3.0 - 2.0 + 0.25);
}

TEST(MlpForward, HandComputedReluNet) {
  const MlpArch arch{{2, 2, 1}, Activation::relu};
  MlpParams p = zero_net(arch);
  p.weights[0](0, 0) = 1.0;
  p.weights[0](0, 1) = -1.0;
  p.weights[0](1, 0) = 0.5;
  p.weights[0](1, 1) = 2.0;
  p.biases[0] = {0.1, -0.2};
  p.weights[1](0, 0) = 1.0;
  p.weights[1](0, 1) = 2.0;
  p.biases[1][0] = 0.3;
  // z1 = (1.1, -1.2), relu -> (1.1, 0), out = 1.1 + 0 + 0.3
  EXPECT_NEAR(lrad::mlp_forward(p, {0.4, -0.6})[0], 1.4, 1e-15);
}

TEST(MlpForward, RejectsDimensionMismatch) {
  const MlpArch arch{{3, 1}, Activation::relu};
  EXPECT_THROW(lrad::mlp_forward(zero_net(arch), {1.0, 2.0}), std::invalid_argument);
}

TEST(MlpForward, Deterministic) {
  const MlpArch arch{{4, 8, 1}, Activation::gelu};
  RngStream s(9, StreamTag::param_init);
  const MlpParams p = lrad::mlp_init(arch, s);
  const Vector x{0.1, -0.2, 0.3, 0.7};
  EXPECT_EQ(lrad::mlp_forward(p, x)[0], lrad::mlp_forward(p, x)[0]);
}

TEST(MlpLoss, PerfectFitHasZeroLossAndGradient) {
  const MlpArch arch{{2, 1}, Activation::relu};
  MlpParams p = zero_net(arch);
  p.weights[0](0, 0) = 1.0;
  p.weights[0](0, 1) = 2.0;
  const std::vector<Vector> xs{{1.0, 0.5}, {-0.5, 1.0}};
  const std::vector<double> ys{2.0, 1.5};
  const auto [loss, grads] = lrad::mlp_loss_and_grad(p, xs, ys);
  EXPECT_EQ(loss, 0.0);
  for (double v : grads.weights[0].a) EXPECT_EQ(v, 0.0);
  for (double v : grads.biases[0]) EXPECT_EQ(v, 0.0);
}

TEST(MlpLoss, SingleNeuronChainRule) {
  const MlpArch arch{{2, 1}, Activation::relu};
  MlpParams p = zero_net(arch);
  p.weights[0](0, 0) = 0.7;
  p.weights[0](0, 1) = -0.3;
  p.biases[0][0] = 0.1;
  const Vector x{0.4, 0.9};
  const double y = -0.5;
  const double r = 0.7 * 0.4 - 0.3 * 0.9 + 0.1 - y;
  const auto [loss, grads] = lrad::mlp_loss_and_grad(p, {x}, {y});
  EXPECT_NEAR(loss, r * r, 1e-15);
  EXPECT_NEAR(grads.weights[0](0, 0), 2.0 * r * x[0], 1e-14);
  EXPECT_NEAR(grads.weights[0](0, 1), 2.0 * r * x[1], 1e-14);
  EXPECT_NEAR(grads.biases[0][0], 2.0 * r, 1e-14);
}

TEST(MlpLoss, RejectsEmptyBatch) {
  const MlpArch arch{{2, 1}, Activation::relu};
  EXPECT_THROW(lrad::mlp_loss_and_grad(zero_net(arch), {}, {}), std::invalid_argument);
}

TEST(MlpLoss, NonnegativeAndZeroOnlyAtInterpolation) {
  const MlpArch arch{{2, 3, 1}, Activation::gelu};
  RngStream s(77, StreamTag::param_init);
  const MlpParams p = lrad::mlp_init(arch, s);
  const std::vector<Vector> xs{{0.2, -0.4}, {0.9, 0.1}};
  std::vector<double> ys;
  for (const Vector& x : xs) ys.push_back(lrad::mlp_forward(p, x)[0]);
  EXPECT_EQ(lrad::mlp_loss(p, xs, ys), 0.0);
  ys[0] += 0.01;
  EXPECT_GT(lrad::mlp_loss(p, xs, ys), 0.0);
}

// central finite differences on the flat parameter vector
Vector fd_gradient(const MlpArch& arch, const Vector& flat, const std::vector<Vector>& xs,
                   const std::vector<double>& ys, double h) {
  Vector g(flat.size());
  Vector probe = flat;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    probe[i] = flat[i] + h;
    const double up = lrad::mlp_loss(lrad::unflatten_params(arch, probe), xs, ys);
    probe[i] = flat[i] - h;
    const double dn = lrad::mlp_loss(lrad::unflatten_params(arch, probe), xs, ys);
    probe[i] = flat[i];
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

// smallest |pre-activation| over all hidden units and batch samples
double min_kink_distance(const MlpParams& p, const std::vector<Vector>& xs) {
  double best = 1e300;
  lrad::MlpScratch scratch(p.arch);
  for (const Vector& x : xs) {
    lrad::mlp_forward_into(p, x, scratch);
    for (int l = 0; l + 1 < p.arch.layer_count(); ++l)
      for (double z : scratch.pre[l]) best = std::min(best, std::abs(z));
  }
  return best;
}

void check_gradients(const MlpArch& arch, int draws, int batch, std::uint64_t seed) {
  const lrad::StreamFamily streams{seed};
  int done = 0;
  std::uint64_t attempt = 0;
  while (done < draws) {
    RngStream ps = streams.make(StreamTag::param_init, attempt, 0);
    RngStream ds = streams.make(StreamTag::mc, attempt, 0);
    ++attempt;
    ASSERT_LT(attempt, 20u * static_cast<unsigned>(draws)) << "too many rejected draws";
    const MlpParams p = lrad::mlp_init(arch, ps);
    std::vector<Vector> xs;
    std::vector<double> ys;
    for (int i = 0; i < batch; ++i) {
      xs.push_back(lrad::sample_uniform_box(ds, arch.input_dim(), -1.0, 1.0));
      ys.push_back(2.0 * ds.next_unit() - 1.0);
    }
    // ReLU has kinks; skip draws that evaluate too close to one
    if (arch.activation == Activation::relu && min_kink_distance(p, xs) < 1e-4) continue;
    ++done;
    const Vector flat = lrad::flatten_params(p);
    const auto [loss, grads] = lrad::mlp_loss_and_grad(p, xs, ys);
    const Vector analytic = lrad::flatten_grads(arch, grads);
    const Vector fd = fd_gradient(arch, flat, xs, ys, 1e-5);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double tol = std::max(1e-5, 1e-3 * std::abs(analytic[i]));
      ASSERT_NEAR(analytic[i], fd[i], tol) << "coordinate " << i;
    }
  }
}

TEST(MlpGradientCheck, SmallReluNet) {
  check_gradients(MlpArch{{3, 4, 1}, Activation::relu}, 5, 4, 11);
}

TEST(MlpGradientCheck, SmallGeluNet) {
  check_gradients(MlpArch{{3, 4, 4, 1}, Activation::gelu}, 5, 4, 12);
}

// reference architectures at reduced draw count (the acceptance suite runs
// the full twenty)
TEST(MlpGradientCheck, ReferenceArchitecturesSmoke) {
  check_gradients(MlpArch{{6, 128, 1}, Activation::relu}, 2, 4, 13);
  check_gradients(MlpArch{{5, 32, 64, 32, 1}, Activation::gelu}, 2, 4, 14);
}

TEST(MlpSnapshot, RoundTripsBitExactly) {
  const MlpArch arch{{4, 6, 1}, Activation::gelu};
  RngStream s(3, StreamTag::param_init);
  const MlpParams p = lrad::mlp_init(arch, s);
  const auto path = std::filesystem::temp_directory_path() / "lrad_mlp_snapshot_test.bin";
  lrad::save_mlp_params(p, path.string());
  const MlpParams q = lrad::load_mlp_params(path.string());
  EXPECT_EQ(q.arch.widths, arch.widths);
  EXPECT_EQ(q.arch.activation, arch.activation);
  const Vector a = lrad::flatten_params(p);
  const Vector b = lrad::flatten_params(q);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
  std::filesystem::remove(path);
}

TEST(MlpSnapshot, MissingFileThrows) {
  EXPECT_THROW(lrad::load_mlp_params("/nonexistent/mlp.bin"), std::runtime_error);
}

}  // namespace
