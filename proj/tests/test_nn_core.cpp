#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "svehnn/model_io.hpp"
#include "svehnn/nn.hpp"
#include "svehnn/rng.hpp"
#include "svehnn/training.hpp"

using namespace svehnn;

namespace {

// 1 shared layer 3->2 plus fusion over (2 latent + 1 tabular); small enough
// to recompute by hand
WdpnModel tiny_model() {
  WdpnModel m;
  m.k_points = 2;
  m.d_tabular = 1;
  PointMlpLayer layer;
  layer.dense = DenseLayerParams::zeros(3, 2);
  layer.dense.w(0, 0) = 1.0;
  layer.dense.w(1, 1) = 1.0;
  layer.dense.w(2, 0) = 1.0;
  layer.dense.w(2, 1) = -1.0;
  layer.dense.bias = {0.1, -0.2};
  layer.bn = BatchNormParams::identity(2);
  layer.relu = true;
  m.point_mlp.push_back(layer);
  m.fusion = DenseLayerParams::zeros(3, 1);
  m.fusion.weights = {0.5, -1.5, 2.0};
  m.fusion.bias = {0.25};
  m.validate();
  return m;
}

HeterogeneousInput tiny_input() {
  HeterogeneousInput z;
  z.cloud.points = {{1.0, 2.0, 3.0}, {-1.0, 0.5, 0.0}};
  z.tabular.values = {0.7};
  return z;
}

}  // namespace

TEST_CASE("linear_forward basics") {
  DenseLayerParams id2 = DenseLayerParams::zeros(2, 2);
  id2.w(0, 0) = 1.0;
  id2.w(1, 1) = 1.0;
  CHECK(linear_forward({2.0, 3.0}, id2) == Vec{2.0, 3.0});

  DenseLayerParams with_bias = DenseLayerParams::zeros(2, 2);
  with_bias.w(0, 0) = 4.0;
  with_bias.w(1, 1) = -7.0;
  with_bias.bias = {0.5, -0.5};
  CHECK(linear_forward({0.0, 0.0}, with_bias) == Vec{0.5, -0.5});

  DenseLayerParams m = DenseLayerParams::zeros(2, 2);
  m.w(0, 0) = 1.0;
  m.w(0, 1) = 2.0;
  m.w(1, 0) = 3.0;
  m.w(1, 1) = 4.0;
  m.bias = {0.5, -0.5};
  // manual matrix arithmetic: [1,1] W + b = [1+3+0.5, 2+4-0.5]
  const Vec out = linear_forward({1.0, 1.0}, m);
  CHECK(out[0] == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(5.5).epsilon(1e-15));

  CHECK_THROWS_AS(linear_forward({1.0}, m), ShapeError);
}

TEST_CASE("relu_forward") {
  CHECK(relu_forward({-1.0, 0.0, 2.0}) == Vec{0.0, 0.0, 2.0});
  CHECK(relu_forward({-5.0, -0.1}) == Vec{0.0, 0.0});
  CHECK(relu_forward({3.0, 0.25}) == Vec{3.0, 0.25});
}

TEST_CASE("batchnorm_infer") {
  BatchNormParams id = BatchNormParams::identity(1);
  CHECK(batchnorm_infer({3.0}, id) == Vec{3.0});

  BatchNormParams p;
  p.gamma = {2.0};
  p.beta = {1.0};
  p.running_mean = {1.0};
  p.running_var = {4.0};
  p.epsilon = 0.0;
  // 2 * (3 - 1) / 2 + 1
  CHECK(batchnorm_infer({3.0}, p)[0] == doctest::Approx(3.0).epsilon(1e-15));
  // input at the running mean lands on beta
  CHECK(batchnorm_infer({1.0}, p)[0] == doctest::Approx(1.0).epsilon(1e-15));

  BatchNormParams q;
  q.gamma = {1.0, 1.0};
  q.beta = {0.5, -0.5};
  q.running_mean = {0.3, 0.7};
  q.running_var = {1.0, 1.0};
  q.epsilon = 0.0;
  const Vec at_mean = batchnorm_infer({0.3, 0.7}, q);
  CHECK(at_mean[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(at_mean[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("pointnet_encode") {
  const WdpnModel m = tiny_model();

  SUBCASE("single point equals its descriptor") {
    PointCloud one;
    one.points = {{1.0, 2.0, 3.0}};
    CHECK(pointnet_encode(one, m) == point_descriptor({1.0, 2.0, 3.0}, m));
  }

  SUBCASE("permutation invariance is exact") {
    PointCloud a, b;
    a.points = {{1.0, 2.0, 3.0}, {-1.0, 0.5, 0.0}};
    b.points = {{-1.0, 0.5, 0.0}, {1.0, 2.0, 3.0}};
    CHECK(pointnet_encode(a, m) == pointnet_encode(b, m));
  }

  SUBCASE("elementwise-dominating point wins every channel") {
    PointCloud c;
    c.points = {{1.0, 2.0, 3.0}, {0.1, 0.2, 0.3}};
    const Vec d0 = point_descriptor({1.0, 2.0, 3.0}, m);
    const Vec d1 = point_descriptor({0.1, 0.2, 0.3}, m);
    REQUIRE(d0[0] >= d1[0]);
    REQUIRE(d0[1] >= d1[1]);
    CHECK(pointnet_encode(c, m) == d0);
  }

  SUBCASE("empty cloud is a domain error") {
    CHECK_THROWS_AS(pointnet_encode(PointCloud{}, m), DomainError);
  }
}

TEST_CASE("wdpn_forward") {
  const WdpnModel m = tiny_model();
  const HeterogeneousInput z = tiny_input();

  SUBCASE("hand-computed logit") {
    // p1: h = (1+3, 2-3) + (0.1, -0.2) = (4.1, -1.2), relu -> (4.1, 0)
    // p2: h = (-1, 0.5) + (0.1, -0.2) = (-0.9, 0.3), relu -> (0, 0.3)
    // pool = (4.1, 0.3); logit = 0.5*4.1 - 1.5*0.3 + 2.0*0.7 + 0.25
    const double expected = 0.5 * 4.1 - 1.5 * 0.3 + 2.0 * 0.7 + 0.25;
    CHECK(wdpn_forward(z, m, nullptr) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(expected == doctest::Approx(3.25).epsilon(1e-12));
  }

  SUBCASE("zero fusion weights return the fusion bias") {
    WdpnModel null_net = m;
    std::fill(null_net.fusion.weights.begin(), null_net.fusion.weights.end(), 0.0);
    CHECK(wdpn_forward(z, null_net, nullptr) == 0.25);
    HeterogeneousInput other = z;
    other.cloud.points[0] = {9.0, -9.0, 9.0};
    CHECK(wdpn_forward(other, null_net, nullptr) == 0.25);
  }

  SUBCASE("permuted cloud gives a bitwise identical logit") {
    HeterogeneousInput swapped = z;
    std::swap(swapped.cloud.points[0], swapped.cloud.points[1]);
    CHECK(wdpn_forward(z, m, nullptr) == wdpn_forward(swapped, m, nullptr));
  }

  SUBCASE("repeated calls are bitwise identical and counted") {
    EvalCounter counter;
    const double first = wdpn_forward(z, m, &counter);
    for (int i = 0; i < 9; ++i) CHECK(wdpn_forward(z, m, &counter) == first);
    CHECK(counter.count() == 10);
  }

  SUBCASE("shape mismatches are rejected") {
    HeterogeneousInput bad = z;
    bad.cloud.points.pop_back();
    CHECK_THROWS_AS(wdpn_forward(bad, m, nullptr), ShapeError);
    HeterogeneousInput bad_tab = z;
    bad_tab.tabular.values.push_back(1.0);
    CHECK_THROWS_AS(wdpn_forward(bad_tab, m, nullptr), ShapeError);
  }
}

TEST_CASE("permutation invariance on random models") {
  for (int draw = 0; draw < 20; ++draw) {
    const std::uint64_t seed = 100 + draw;
    ArchSpec arch;
    arch.point_mlp_widths = {5, 3};
    const WdpnModel m = init_model(6, 2, arch, seed);
    Rng rng = Rng::substream(seed, 77);
    HeterogeneousInput z;
    for (int j = 0; j < 6; ++j)
      z.cloud.points.push_back(
          Point3{rng.normal(), rng.normal(), rng.normal()});
    z.tabular.values = {rng.normal(), rng.normal()};
    const double base = wdpn_forward(z, m, nullptr);

    HeterogeneousInput shuffled = z;
    std::vector<int> order = {3, 0, 5, 1, 4, 2};
    for (int j = 0; j < 6; ++j)
      shuffled.cloud.points[j] = z.cloud.points[order[j]];
    CHECK(wdpn_forward(shuffled, m, nullptr) == base);
  }
}

TEST_CASE("model JSON round trip") {
  const WdpnModel m = tiny_model();
  const auto j = model_to_json(m);
  const WdpnModel back = model_from_json(j);
  CHECK(model_to_json(back) == j);
  CHECK(model_checksum(back) == model_checksum(m));
  const HeterogeneousInput z = tiny_input();
  CHECK(wdpn_forward(z, back, nullptr) == wdpn_forward(z, m, nullptr));

  SUBCASE("unsupported version is rejected") {
    auto bad = j;
    bad["format_version"] = 999;
    CHECK_THROWS_AS(model_from_json(bad), ParseError);
  }
  SUBCASE("missing fields are rejected") {
    auto bad = j;
    bad.erase("fusion");
    CHECK_THROWS_AS(model_from_json(bad), ParseError);
  }
  SUBCASE("inconsistent dims are rejected") {
    auto bad = j;
    bad["D"] = 3;  // fusion width no longer matches latent + D
    CHECK_THROWS_AS(model_from_json(bad), ShapeError);
  }
}

TEST_CASE("model validation") {
  WdpnModel m = tiny_model();
  m.fusion.weights.pop_back();
  m.fusion.in_dim = 2;
  CHECK_THROWS_AS(m.validate(), ShapeError);

  WdpnModel nan_model = tiny_model();
  nan_model.point_mlp[0].dense.weights[0] =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nan_model.validate(), ShapeError);
}
