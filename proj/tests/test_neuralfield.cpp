#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fieldforge/error.hpp"
#include "fieldforge/neuralfield.hpp"
#include "fieldforge/random.hpp"
#include "oracles.hpp"

using namespace fieldforge;

namespace {

SirenConfig small_config(FinalActivation act, int layers = 2, int width = 8) {
  SirenConfig c;
  c.hidden_layers = layers;
  c.hidden_width = width;
  c.omega_first = 3.0;
  c.omega_hidden = 2.0;
  c.final_activation = act;
  return c;
}

using oracle::random_points;
using oracle::rel_err;

}  // namespace

TEST_CASE("zero network with linear output is zero everywhere") {
  SirenNet<double> net(small_config(FinalActivation::Linear));
  auto pts = random_points(7, 1);
  for (double v : forward(net, pts)) CHECK(v == 0.0);
}

TEST_CASE("parameter layout and count") {
  SirenConfig c = small_config(FinalActivation::Linear, 3, 5);
  SirenNet<double> net(c);
  // 5*4+5 + 2*(5*5+5) + 1*5+1
  CHECK(net.parameter_count() == 25 + 60 + 6);
  CHECK(net.bias_offset(0) == 20);
  CHECK(net.weight_offset(1) == 25);
  CHECK(net.bias_offset(3) == net.parameter_count() - 1);
}

TEST_CASE("one-unit network matches hand computation") {
  SirenConfig c;
  c.hidden_layers = 1;
  c.hidden_width = 1;
  c.omega_first = 30.0;
  c.final_activation = FinalActivation::Linear;
  SirenNet<double> net(c);
  const double w[4] = {0.1, -0.2, 0.05, 0.3};
  for (int k = 0; k < 4; ++k) net.weight(0, 0, k) = w[k];
  net.bias(0, 0) = 0.4;
  net.weight(1, 0, 0) = 1.5;
  net.bias(1, 0) = -0.25;
  const std::vector<double> x = {0.5, -0.5, 0.25, -0.75};
  const double z = 30.0 * (0.05 + 0.1 + 0.0125 - 0.225) + 0.4;
  CHECK(forward(net, x)[0] == doctest::Approx(1.5 * std::sin(z) - 0.25).epsilon(1e-12));
  CHECK(dF_dphi(net, x)[0] == doctest::Approx(1.5 * std::cos(z) * 30.0 * 0.3).epsilon(1e-12));

  // At the origin the derivative reduces to omega * w_phi * cos(b) * w_out.
  const std::vector<double> origin = {0.0, 0.0, 0.0, 0.0};
  CHECK(dF_dphi(net, origin)[0] == doctest::Approx(30.0 * 0.3 * std::cos(0.4) * 1.5).epsilon(1e-12));
}

TEST_CASE("forward matches scalar-loop oracle") {
  for (auto act : {FinalActivation::Linear, FinalActivation::Sigmoid}) {
    auto net = SirenNet<double>::initialized(small_config(act, 3, 6), 11);
    auto pts = random_points(1100, 5);  // spans several chunks
    auto y = forward(net, pts);
    for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y[i] == doctest::Approx(oracle::forward(net, &pts[4 * i])).epsilon(1e-12));
  }
}

TEST_CASE("identical points give identical outputs") {
  auto net = SirenNet<float>::initialized(small_config(FinalActivation::Sigmoid), 3);
  std::vector<double> pts;
  for (int i = 0; i < 9; ++i) pts.insert(pts.end(), {0.1, 0.2, -0.3, 0.4});
  auto y = forward(net, pts);
  for (float v : y) CHECK(v == y[0]);
}

TEST_CASE("dF_dphi matches central differences") {
  for (auto act : {FinalActivation::Linear, FinalActivation::Sigmoid}) {
    auto net = SirenNet<double>::initialized(small_config(act), 21);
    auto pts = random_points(40, 8);
    auto d = dF_dphi(net, pts);
    const double h = 1e-5;
    for (std::size_t i = 0; i < 40; ++i) {
      double p[4], m[4];
      std::copy_n(&pts[4 * i], 4, p);
      std::copy_n(&pts[4 * i], 4, m);
      p[kPhiAxis] += h;
      m[kPhiAxis] -= h;
      const double fd = (oracle::forward(net, p) - oracle::forward(net, m)) / (2 * h);
      CHECK(rel_err(d[i], fd) < 1e-6);
    }
  }
}

TEST_CASE("no phi path means zero derivative and zero penalty") {
  auto net = SirenNet<double>::initialized(small_config(FinalActivation::Sigmoid), 2);
  for (int r = 0; r < net.layer_outputs(0); ++r) net.weight(0, r, kPhiAxis) = 0.0;
  auto pts = random_points(20, 3);
  for (double v : dF_dphi(net, pts)) CHECK(v == 0.0);
  CHECK(gdir_penalty(net, pts) == 0.0);
}

TEST_CASE("loss_mse matches loop oracle") {
  auto net = SirenNet<double>::initialized(small_config(FinalActivation::Sigmoid), 4);
  auto pts = random_points(37, 9);
  std::vector<double> targets(37);
  Rng rng(10);
  for (double& t : targets) t = uniform01(rng) < 0.5 ? 0.0 : 1.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < 37; ++i) {
    const double e = targets[i] - oracle::forward(net, &pts[4 * i]);
    sse += e * e;
  }
  CHECK(loss_mse(net, PointBatch{pts, targets}) == doctest::Approx(sse / 37).epsilon(1e-12));

  SirenNet<double> zero(small_config(FinalActivation::Linear));
  std::vector<double> ones(10, 1.0);
  auto ten = random_points(10, 1);
  CHECK(loss_mse(zero, PointBatch{ten, ones}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(loss_mse(zero, PointBatch{}), InputError);
}

TEST_CASE("gdir penalty is the mean squared derivative") {
  auto net = SirenNet<double>::initialized(small_config(FinalActivation::Linear), 6);
  auto pts = random_points(32, 12);
  auto d = dF_dphi(net, pts);
  double s = 0.0;
  for (double v : d) s += v * v;
  CHECK(gdir_penalty(net, pts) == doctest::Approx(s / 32).epsilon(1e-12));
  CHECK_THROWS_AS(gdir_penalty(net, std::span<const double>{}), InputError);
}

TEST_CASE("scaling the output layer scales the derivative") {
  auto net = SirenNet<double>::initialized(small_config(FinalActivation::Linear), 7);
  auto pts = random_points(25, 2);
  auto d0 = dF_dphi(net, pts);
  const int out = net.layer_count() - 1;
  for (int c = 0; c < net.layer_inputs(out); ++c) net.weight(out, 0, c) *= -2.5;
  net.bias(out, 0) *= -2.5;
  auto d1 = dF_dphi(net, pts);
  for (std::size_t i = 0; i < d0.size(); ++i) CHECK(d1[i] == doctest::Approx(-2.5 * d0[i]).epsilon(1e-12));
}

TEST_CASE("total-loss gradient matches central differences") {
  const double lambda = 0.3;
  for (auto act : {FinalActivation::Linear, FinalActivation::Sigmoid}) {
    CAPTURE(to_string(act));
    auto net = SirenNet<double>::initialized(small_config(act), 31);
    auto pts = random_points(16, 14);
    auto proxies = random_points(16, 15);
    std::vector<double> targets(16);
    Rng rng(16);
    for (double& t : targets) t = act == FinalActivation::Sigmoid ? (uniform01(rng) < 0.5 ? 0.0 : 1.0) : uniform(rng, -1, 1);
    PointBatch batch{pts, targets};

    std::vector<double> grad;
    LossBreakdown lb = grad_total_loss(net, batch, proxies, lambda, grad);
    CHECK(lb.total == doctest::Approx(lb.mse + lambda * lb.gdir).epsilon(1e-12));

    auto total = [&](const SirenNet<double>& n) { return loss_mse(n, batch) + lambda * gdir_penalty(n, proxies); };
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < net.parameter_count(); ++k) {
      SirenNet<double> p = net, m = net;
      p.parameters()[k] += h;
      m.parameters()[k] -= h;
      const double fd = (total(p) - total(m)) / (2 * h);
      worst = std::max(worst, rel_err(grad[k], fd));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("lambda zero gives the plain MSE gradient") {
  auto net = SirenNet<double>::initialized(small_config(FinalActivation::Sigmoid), 41);
  auto pts = random_points(30, 1);
  std::vector<double> targets(30, 0.5);
  std::vector<double> g0, g1(net.parameter_count(), 0.0);
  LossBreakdown lb = grad_total_loss(net, PointBatch{pts, targets}, pts, 0.0, g0);
  accumulate_mse_gradient(net, PointBatch{pts, targets}, g1);
  CHECK(lb.gdir == 0.0);
  CHECK(g0 == g1);
}

TEST_CASE("duplicating proxies leaves the gdir gradient unchanged") {
  auto net = SirenNet<double>::initialized(small_config(FinalActivation::Sigmoid), 5);
  auto proxies = random_points(12, 3);
  std::vector<double> doubled = proxies;
  doubled.insert(doubled.end(), proxies.begin(), proxies.end());
  std::vector<double> g1(net.parameter_count(), 0.0), g2(net.parameter_count(), 0.0);
  accumulate_gdir_gradient(net, proxies, 1.0, g1);
  accumulate_gdir_gradient(net, doubled, 1.0, g2);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-12));
}

TEST_CASE("initialization ranges") {
  SirenConfig c = small_config(FinalActivation::Sigmoid, 2, 16);
  c.omega_first = 30.0;
  c.omega_hidden = 30.0;
  auto net = SirenNet<double>::initialized(c, 99);
  for (int r = 0; r < 16; ++r)
    for (int k = 0; k < 4; ++k) CHECK(std::abs(net.weight(0, r, k)) <= 0.25);
  const double bound = std::sqrt(6.0 / 16) / 30.0;
  for (int r = 0; r < 16; ++r)
    for (int k = 0; k < 16; ++k) CHECK(std::abs(net.weight(1, r, k)) <= bound);
  CHECK(SirenNet<double>::initialized(c, 99) == net);
  CHECK_FALSE(SirenNet<double>::initialized(c, 98) == net);
}

TEST_CASE("checkpoint round trip") {
  auto net = SirenNet<float>::initialized(small_config(FinalActivation::Sigmoid), 1);
  nlohmann::json extra = {{"mode", "occupancy"}};
  auto bytes = encode_checkpoint(net, extra);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SRNC");
  nlohmann::json back_extra;
  AnySirenNet back = decode_checkpoint(bytes, &back_extra);
  REQUIRE(std::holds_alternative<SirenNet<float>>(back));
  CHECK(std::get<SirenNet<float>>(back) == net);
  CHECK(back_extra == extra);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
}

TEST_CASE("config validation") {
  SirenConfig c;
  c.hidden_layers = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.omega_first = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(final_activation_from_string("relu"), ConfigError);
}
