#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "svehnn/attribution.hpp"
#include "svehnn/hull.hpp"
#include "svehnn/rng.hpp"
#include "svehnn/training.hpp"
#include "svehnn/verify.hpp"

using namespace svehnn;

namespace {

// f(x1, x2) = x1 * x2 over two tabular features
class ProductGame final : public LogitModel {
 public:
  int num_points() const override { return 0; }
  int num_tabular() const override { return 2; }
  double logit(const HeterogeneousInput& z, EvalCounter* counter) const override {
    if (counter) counter->add(1);
    return z.tabular.values[0] * z.tabular.values[1];
  }
};

HeterogeneousInput ones_input() {
  HeterogeneousInput z;
  z.tabular.values = {1.0, 1.0};
  return z;
}

// tabular-only linear model w^T x + b
WdpnModel linear_tabular_model(const Vec& w, double b) {
  WdpnModel m;
  m.k_points = 0;
  m.d_tabular = static_cast<int>(w.size());
  m.fusion = DenseLayerParams::zeros(m.d_tabular, 1);
  for (int i = 0; i < m.d_tabular; ++i) m.fusion.w(i, 0) = w[i];
  m.fusion.bias = {b};
  m.validate();
  return m;
}

HeterogeneousInput tabular_input(const Vec& x) {
  HeterogeneousInput z;
  z.tabular.values = x;
  return z;
}

// all feature orders, averaged marginals: the sampling estimator's
// population value, equal to the exact Shapley value
std::vector<double> exhaustive_permutation_shapley(const HeterogeneousInput& z,
                                                   const LogitModel& model,
                                                   const BaselineSpec& baseline) {
  const int f = model.num_points() + model.num_tabular();
  std::vector<int> order(f);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> acc(f, 0.0);
  std::int64_t count = 0;
  const double f_bl = model.logit(baseline_input(z, baseline), nullptr);
  do {
    Coalition prefix(f);
    double prev = f_bl;
    for (int t = 0; t < f; ++t) {
      prefix.set(order[t]);
      const double v =
          model.logit(masked_input(z, prefix, baseline), nullptr);
      acc[order[t]] += v - prev;
      prev = v;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& v : acc) v /= static_cast<double>(count);
  return acc;
}

}  // namespace

TEST_CASE("masked_input") {
  HeterogeneousInput z;
  z.cloud.points = {{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}};
  z.tabular.values = {7.0, 8.0};
  const BaselineSpec zero = BaselineSpec::zero_baseline();

  SUBCASE("full coalition keeps the input") {
    const auto full = masked_input(z, Coalition::full(4), zero);
    CHECK(full.cloud.points == z.cloud.points);
    CHECK(full.tabular.values == z.tabular.values);
  }

  SUBCASE("empty coalition is the baseline") {
    const auto none = masked_input(z, Coalition(4), zero);
    CHECK(none.cloud.points[0] == Point3{0.0, 0.0, 0.0});
    CHECK(none.cloud.points[1] == Point3{0.0, 0.0, 0.0});
    CHECK(none.tabular.values == Vec{0.0, 0.0});
  }

  SUBCASE("hull baseline substitutes the matched template point") {
    PointCloud tpl;
    tpl.points = {{-1.0, -1.0, -1.0}, {9.0, 9.0, 9.0}};
    const BaselineSpec hull = BaselineSpec::hull_baseline(tpl);
    Coalition s(4);
    s.set(0);
    s.set(2);
    s.set(3);
    const auto masked = masked_input(z, s, hull);
    CHECK(masked.cloud.points[0] == z.cloud.points[0]);
    CHECK(masked.cloud.points[1] == Point3{9.0, 9.0, 9.0});
  }

  SUBCASE("hull baseline without template is an error") {
    BaselineSpec broken;
    broken.kind = BaselineKind::hull;
    CHECK_THROWS_AS(masked_input(z, Coalition(4), broken), DomainError);
  }
}

TEST_CASE("coalition_value") {
  const ProductGame game;
  const HeterogeneousInput z = ones_input();
  const BaselineSpec zero = BaselineSpec::zero_baseline();

  CHECK(coalition_value(Coalition(2), z, game, zero, nullptr) == 0.0);
  const double g_full =
      coalition_value(Coalition::full(2), z, game, zero, nullptr);
  CHECK(g_full == doctest::Approx(1.0).epsilon(1e-15));
  Coalition only_first(2);
  only_first.set(0);
  CHECK(coalition_value(only_first, z, game, zero, nullptr) == 0.0);
}

TEST_CASE("exact_shapley") {
  const BaselineSpec zero = BaselineSpec::zero_baseline();

  SUBCASE("product game splits the credit") {
    const ProductGame game;
    const Attribution a = exact_shapley(ones_input(), game, zero);
    CHECK(a.values[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.values[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.evaluations == 4 + 2);
  }

  SUBCASE("linear games get w_i x_i") {
    const WdpnModel m = linear_tabular_model({0.8, -1.3, 0.4}, 0.25);
    const WdpnLogit f(m);
    const HeterogeneousInput z = tabular_input({0.9, -0.6, 0.3});
    const Attribution a = exact_shapley(z, f, zero);
    for (int i = 0; i < 3; ++i)
      CHECK(a.values[i] ==
            doctest::Approx(m.fusion.w(i, 0) * z.tabular.values[i]).epsilon(1e-12));
  }

  SUBCASE("evaluation count is 2^F + 2 on sixteen features") {
    ArchSpec arch;
    arch.point_mlp_widths = {4, 4};
    const WdpnModel m = init_model(16, 0, arch, 21);
    Rng rng(22);
    HeterogeneousInput z;
    for (int j = 0; j < 16; ++j)
      z.cloud.points.push_back(Point3{rng.normal(), rng.normal(), 0.0});
    const WdpnLogit f(m);
    const Attribution a = exact_shapley(z, f, zero, 4);
    CHECK(a.evaluations == 65538);
    // completeness while the table is at hand
    const double total = std::accumulate(a.values.begin(), a.values.end(), 0.0);
    CHECK(total == doctest::Approx(a.f_z - a.f_baseline).epsilon(1e-9));
  }

  SUBCASE("refuses oversized feature spaces with guidance") {
    class Wide final : public LogitModel {
     public:
      int num_points() const override { return 25; }
      int num_tabular() const override { return 0; }
      double logit(const HeterogeneousInput&, EvalCounter*) const override {
        return 0.0;
      }
    };
    HeterogeneousInput z;
    z.cloud.points.assign(25, Point3{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(exact_shapley(z, Wide{}, zero), RefusalError);
  }
}

TEST_CASE("shapley_sampling") {
  const BaselineSpec zero = BaselineSpec::zero_baseline();

  SUBCASE("marginals telescope to f(z) - f(baseline)") {
    const WdpnModel m = build_verification_model(31);
    const HeterogeneousInput z = build_verification_input(31);
    const WdpnLogit f(m);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      ExplainerConfig config;
      config.m = 1;
      config.seed = seed;
      const Attribution a = shapley_sampling(z, f, zero, config);
      const double total =
          std::accumulate(a.values.begin(), a.values.end(), 0.0);
      CHECK(total == doctest::Approx(a.f_z - a.f_baseline).epsilon(1e-12));
    }
  }

  SUBCASE("evaluation count is M * F") {
    ArchSpec arch;
    arch.point_mlp_widths = {2};
    const WdpnModel m = init_model(16, 0, arch, 5);
    Rng rng(6);
    HeterogeneousInput z;
    for (int j = 0; j < 16; ++j)
      z.cloud.points.push_back(Point3{rng.normal(), rng.normal(), 0.0});
    const WdpnLogit f(m);
    ExplainerConfig config;
    config.m = 2000;
    config.seed = 9;
    const Attribution a = shapley_sampling(z, f, zero, config, 4);
    CHECK(a.evaluations == 32000);
  }

  SUBCASE("converges to the exact values on the product game") {
    const ProductGame game;
    ExplainerConfig config;
    config.m = 10000;
    config.seed = 123;
    const Attribution a = shapley_sampling(ones_input(), game, zero, config);
    CHECK(std::abs(a.values[0] - 0.5) <= 0.02);
    CHECK(std::abs(a.values[1] - 0.5) <= 0.02);
  }

  SUBCASE("fixed seed gives identical results at any thread count") {
    const WdpnModel m = build_verification_model(33);
    const HeterogeneousInput z = build_verification_input(33);
    const WdpnLogit f(m);
    ExplainerConfig config;
    config.m = 64;
    config.seed = 77;
    const Attribution a1 = shapley_sampling(z, f, zero, config, 1);
    const Attribution a4 = shapley_sampling(z, f, zero, config, 4);
    CHECK(a1.values == a4.values);
  }
}

TEST_CASE("occlusion") {
  const BaselineSpec zero = BaselineSpec::zero_baseline();

  SUBCASE("evaluation count is F + 1") {
    ArchSpec arch;
    arch.point_mlp_widths = {2};
    const WdpnModel m = init_model(16, 0, arch, 15);
    Rng rng(16);
    HeterogeneousInput z;
    for (int j = 0; j < 16; ++j)
      z.cloud.points.push_back(Point3{rng.normal(), rng.normal(), 0.0});
    const WdpnLogit f(m);
    CHECK(occlusion(z, f, zero).evaluations == 17);
  }

  SUBCASE("matches exact Shapley on linear games") {
    const WdpnModel m = linear_tabular_model({0.8, -1.3, 0.4}, 0.25);
    const WdpnLogit f(m);
    const HeterogeneousInput z = tabular_input({0.9, -0.6, 0.3});
    const Attribution occ = occlusion(z, f, zero);
    const Attribution ex = exact_shapley(z, f, zero);
    for (int i = 0; i < 3; ++i)
      CHECK(occ.values[i] == doctest::Approx(ex.values[i]).epsilon(1e-12));
  }

  SUBCASE("violates completeness on the product game") {
    const ProductGame game;
    const Attribution a = occlusion(ones_input(), game, zero);
    CHECK(a.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    const double total = a.values[0] + a.values[1];
    CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(a.f_z - a.f_baseline == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("svehnn_full") {
  const BaselineSpec zero = BaselineSpec::zero_baseline();

  SUBCASE("probabilistic evaluation count is 2 F^2") {
    ArchSpec arch;
    arch.point_mlp_widths = {4};
    const WdpnModel m = init_model(16, 0, arch, 51);
    Rng rng(52);
    HeterogeneousInput z;
    for (int j = 0; j < 16; ++j)
      z.cloud.points.push_back(Point3{rng.normal(), rng.normal(), 0.0});
    const Attribution a = svehnn_full(z, m, zero);
    CHECK(a.evaluations == 512);
  }

  SUBCASE("tabular-only linear games are recovered to high precision") {
    const WdpnModel m = linear_tabular_model({0.8, -1.3, 0.4}, 0.25);
    const HeterogeneousInput z = tabular_input({0.9, -0.6, 0.3});
    const Attribution a = svehnn_full(z, m, zero);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(a.values[i] - m.fusion.w(i, 0) * z.tabular.values[i]) <=
            1e-9);
  }

  SUBCASE("null tabular column receives zero") {
    WdpnModel m = build_verification_model(61);
    const int latent = m.latent_dim();
    m.fusion.w(latent + 0, 0) = 0.0;
    const HeterogeneousInput z = build_verification_input(61);
    const Attribution a = svehnn_full(z, m, zero);
    CHECK(std::abs(a.values[static_cast<std::size_t>(m.k_points)]) <= 1e-12);
  }
}

TEST_CASE("svehnn_mc") {
  const BaselineSpec zero = BaselineSpec::zero_baseline();
  const WdpnModel m = build_verification_model(71);
  const HeterogeneousInput z = build_verification_input(71);
  const int f = m.num_features();

  SUBCASE("stratified draws of every k reproduce the full estimator") {
    std::vector<int> all_k(f);
    std::iota(all_k.begin(), all_k.end(), 0);
    const Attribution strat = svehnn_from_draws(
        z, m, zero, VarianceMode::as_written,
        std::vector<std::vector<int>>(f, all_k));
    const Attribution full = svehnn_full(z, m, zero);
    for (int i = 0; i < f; ++i)
      CHECK(strat.values[i] == doctest::Approx(full.values[i]).epsilon(1e-15));
  }

  SUBCASE("fixed seed is deterministic, evaluations are 2 M F") {
    ExplainerConfig config;
    config.m = 37;
    config.seed = 5;
    const Attribution a = svehnn_mc(z, m, zero, config);
    const Attribution b = svehnn_mc(z, m, zero, config, 4);
    CHECK(a.values == b.values);
    CHECK(a.evaluations == static_cast<std::uint64_t>(2 * 37 * f));
  }

  SUBCASE("a moderate budget lands near the full estimator") {
    ArchSpec arch;
    arch.point_mlp_widths = {8, 8};
    const WdpnModel m16 = init_model(16, 0, arch, 81, 1.2);
    Rng rng(82);
    HeterogeneousInput z16;
    for (int j = 0; j < 16; ++j)
      z16.cloud.points.push_back(Point3{rng.normal(), rng.normal(), 0.0});
    ExplainerConfig config;
    config.m = 150;
    config.seed = 17;
    const Attribution mc = svehnn_mc(z16, m16, zero, config, 4);
    const Attribution full = svehnn_full(z16, m16, zero, VarianceMode::as_written, 4);
    double mad = 0.0;
    for (int i = 0; i < 16; ++i) mad += std::abs(mc.values[i] - full.values[i]);
    mad /= 16.0;
    CHECK(mad <= 0.05);
  }
}

TEST_CASE("axioms of the exact oracle") {
  const BaselineSpec zero = BaselineSpec::zero_baseline();

  SUBCASE("completeness on random inputs") {
    ArchSpec arch;
    arch.point_mlp_widths = {4, 4};
    const WdpnModel m = init_model(5, 3, arch, 91, 1.4);
    const WdpnLogit f(m);
    for (int draw = 0; draw < 20; ++draw) {
      Rng rng(1000 + draw);
      HeterogeneousInput z;
      for (int j = 0; j < 5; ++j)
        z.cloud.points.push_back(Point3{rng.normal(), rng.normal(), rng.normal()});
      z.tabular.values = {rng.normal(), rng.normal(), rng.normal()};
      const Attribution a = exact_shapley(z, f, zero);
      const double total = std::accumulate(a.values.begin(), a.values.end(), 0.0);
      const double target = a.f_z - a.f_baseline;
      CHECK(std::abs(total - target) <=
            1e-6 * std::max(1.0, std::abs(target)));
    }
  }

  SUBCASE("null player") {
    WdpnModel m = build_verification_model(92);
    const int latent = m.latent_dim();
    m.fusion.w(latent + 2, 0) = 0.0;
    const HeterogeneousInput z = build_verification_input(92);
    const WdpnLogit f(m);
    const int null_feature = m.k_points + 2;
    CHECK(std::abs(exact_shapley(z, f, zero).values[null_feature]) <= 1e-9);
    CHECK(std::abs(occlusion(z, f, zero).values[null_feature]) <= 1e-9);
    CHECK(std::abs(svehnn_full(z, m, zero).values[null_feature]) <= 1e-9);
  }

  SUBCASE("symmetry for duplicated tabular features") {
    const WdpnModel m = linear_tabular_model({0.7, 0.7, -0.2}, 0.1);
    const WdpnLogit f(m);
    const HeterogeneousInput z = tabular_input({0.45, 0.45, 0.9});
    const Attribution a = exact_shapley(z, f, zero);
    CHECK(std::abs(a.values[0] - a.values[1]) <= 1e-9);
  }

  SUBCASE("linearity across models sharing a feature space") {
    const WdpnModel m1 = build_verification_model(93);
    const WdpnModel m2 = build_verification_model(94);
    const HeterogeneousInput z = build_verification_input(93);
    const double alpha = 1.75, beta = -0.5;
    class Combined final : public LogitModel {
     public:
      Combined(const WdpnModel& a, const WdpnModel& b, double ca, double cb)
          : a_(a), b_(b), ca_(ca), cb_(cb) {}
      int num_points() const override { return a_.k_points; }
      int num_tabular() const override { return a_.d_tabular; }
      double logit(const HeterogeneousInput& z, EvalCounter* counter) const override {
        return ca_ * wdpn_forward(z, a_, counter) +
               cb_ * wdpn_forward(z, b_, nullptr);
      }
     private:
      const WdpnModel& a_;
      const WdpnModel& b_;
      double ca_, cb_;
    };
    const Combined combined(m1, m2, alpha, beta);
    const Attribution a_comb = exact_shapley(z, combined, zero);
    const Attribution a1 = exact_shapley(z, WdpnLogit(m1), zero);
    const Attribution a2 = exact_shapley(z, WdpnLogit(m2), zero);
    for (int i = 0; i < m1.num_features(); ++i)
      CHECK(std::abs(a_comb.values[i] -
                     (alpha * a1.values[i] + beta * a2.values[i])) <= 1e-9);
  }

  SUBCASE("scaling the fusion layer scales every value") {
    const WdpnModel m = build_verification_model(95);
    const HeterogeneousInput z = build_verification_input(95);
    const WdpnLogit f(m);
    const Attribution base = exact_shapley(z, f, zero);

    WdpnModel doubled = m;
    for (auto& w : doubled.fusion.weights) w *= 2.0;
    doubled.fusion.bias[0] *= 2.0;
    const Attribution twice = exact_shapley(z, WdpnLogit(doubled), zero);
    for (int i = 0; i < m.num_features(); ++i)
      CHECK(twice.values[i] == 2.0 * base.values[i]);  // exact: power of two

    WdpnModel tripled = m;
    for (auto& w : tripled.fusion.weights) w *= 3.0;
    tripled.fusion.bias[0] *= 3.0;
    const Attribution thrice = exact_shapley(z, WdpnLogit(tripled), zero);
    std::vector<std::size_t> rank_base(m.num_features()), rank_thrice(m.num_features());
    std::iota(rank_base.begin(), rank_base.end(), 0);
    rank_thrice = rank_base;
    std::sort(rank_base.begin(), rank_base.end(),
              [&](std::size_t a, std::size_t b) { return base.values[a] > base.values[b]; });
    std::sort(rank_thrice.begin(), rank_thrice.end(), [&](std::size_t a, std::size_t b) {
      return thrice.values[a] > thrice.values[b];
    });
    CHECK(rank_base == rank_thrice);
    for (int i = 0; i < m.num_features(); ++i)
      CHECK(std::abs(thrice.values[i] - 3.0 * base.values[i]) <= 1e-9);
  }
}

TEST_CASE("sampling agrees with exhaustive permutation enumeration") {
  const WdpnModel m = linear_tabular_model({0.8, -1.3, 0.4}, 0.25);
  const WdpnLogit f(m);
  const HeterogeneousInput z = tabular_input({0.9, -0.6, 0.3});
  const BaselineSpec zero = BaselineSpec::zero_baseline();
  const auto enumerated = exhaustive_permutation_shapley(z, f, zero);
  const Attribution exact = exact_shapley(z, f, zero);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(enumerated[i] - exact.values[i]) <= 1e-12);
}

TEST_CASE("hull_template") {
  SUBCASE("points already on their hull map to themselves") {
    PointCloud cube;
    for (int i = 0; i < 8; ++i)
      cube.points.push_back(Point3{i & 1 ? 1.0 : -1.0, i & 2 ? 1.0 : -1.0,
                                   i & 4 ? 1.0 : -1.0});
    const HullTemplateResult r = hull_template({cube, cube, cube});
    REQUIRE_FALSE(r.degenerate);
    for (int j = 0; j < 8; ++j) {
      for (int a = 0; a < 3; ++a)
        CHECK(r.cloud.points[j][a] ==
              doctest::Approx(cube.points[j][a]).epsilon(1e-9));
    }
  }

  SUBCASE("sphere samples produce a template near radius one") {
    Rng rng(404);
    std::vector<PointCloud> clouds;
    for (int c = 0; c < 40; ++c) {
      PointCloud cloud;
      for (int j = 0; j < 16; ++j) {
        Point3 p{rng.normal(), rng.normal(), rng.normal()};
        const double n =
            std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        cloud.points.push_back(Point3{p[0] / n, p[1] / n, p[2] / n});
      }
      clouds.push_back(std::move(cloud));
    }
    const HullTemplateResult r = hull_template(clouds);
    REQUIRE_FALSE(r.degenerate);
    for (const auto& p : r.cloud.points) {
      const double radius =
          std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      CHECK(radius == doctest::Approx(1.0).epsilon(0.05));
    }
  }

  SUBCASE("cube corners duplicated to sixteen points stay on the surface") {
    PointCloud cloud;
    for (int rep = 0; rep < 2; ++rep)
      for (int i = 0; i < 8; ++i)
        cloud.points.push_back(Point3{i & 1 ? 1.0 : -1.0, i & 2 ? 1.0 : -1.0,
                                      i & 4 ? 1.0 : -1.0});
    const HullTemplateResult r = hull_template({cloud});
    REQUIRE_FALSE(r.degenerate);
    for (const auto& p : r.cloud.points) {
      const double m =
          std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])});
      CHECK(m == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::abs(p[0]) <= 1.0 + 1e-9);
      CHECK(std::abs(p[1]) <= 1.0 + 1e-9);
      CHECK(std::abs(p[2]) <= 1.0 + 1e-9);
    }
  }

  SUBCASE("coplanar data falls back to the bounding box with a flag") {
    PointCloud flat;
    Rng rng(505);
    for (int j = 0; j < 16; ++j)
      flat.points.push_back(
          Point3{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0});
    const HullTemplateResult r = hull_template({flat});
    CHECK(r.degenerate);
    for (const auto& p : r.cloud.points) CHECK(p[2] == 0.0);
  }
}
