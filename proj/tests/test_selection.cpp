#include <doctest.h>

#include <cmath>
#include <random>

#include "mrregger/selection.hpp"
#include "mrregger/summation.hpp"

using namespace mrregger;

TEST_CASE("RB correction is odd in gamma_hat, its variance even") {
  for (double sigma : {0.002, 0.01, 0.05}) {
    for (double lambda : {1.0, 4.0556, 5.4513}) {
      for (double eta : {0.2, 0.5, 0.8}) {
        const SelectionConfig cfg{lambda, eta, 1};
        for (double t : {0.0, 0.5, 2.0, 3.5, 6.0}) {
          const double g = t * sigma;
          const auto pos = rao_blackwell_gamma(g, sigma, cfg);
          const auto neg = rao_blackwell_gamma(-g, sigma, cfg);
          CHECK(pos.gamma_rb == doctest::Approx(-neg.gamma_rb).epsilon(1e-13));
          // Near zero the unbiased variance estimate can be negative; that
          // must happen symmetrically.
          double vp = 0, vn = 0;
          bool tp = false, tn = false;
          try { vp = rao_blackwell_variance(g, sigma, cfg); } catch (const Error&) { tp = true; }
          try { vn = rao_blackwell_variance(-g, sigma, cfg); } catch (const Error&) { tn = true; }
          CHECK(tp == tn);
          if (!tp) CHECK(vp == doctest::Approx(vn).epsilon(1e-13));
        }
      }
    }
  }
  CHECK(rao_blackwell_gamma(0.0, 0.01, SelectionConfig{4.0556, 0.5, 1}).gamma_rb == 0.0);
}

TEST_CASE("a negative variance estimate is an error, not clamped") {
  CHECK_THROWS_WITH(rao_blackwell_variance(0.0, 0.01, SelectionConfig{4.0556, 0.5, 1}),
                    "degenerate RB variance");
  CHECK(rao_blackwell_variance(0.002, 0.01, SelectionConfig{4.0556, 0.5, 1}) > 0);
}

TEST_CASE("zero threshold leaves the associations untouched") {
  const SelectionConfig cfg{0.0, 0.5, 1};
  for (double g : {-0.3, 0.001, 0.02}) {
    CHECK(rao_blackwell_gamma(g, 0.01, cfg).gamma_rb == g);
    CHECK(rao_blackwell_variance(g, 0.01, cfg) == doctest::Approx(1e-4).epsilon(1e-14));
  }
}

TEST_CASE("strong instruments are barely corrected") {
  const SelectionConfig cfg{5.4513, 0.5, 1};
  const auto rb = rao_blackwell_gamma(0.5, 0.01, cfg);
  CHECK(rb.gamma_rb == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rao_blackwell_variance(0.5, 0.01, cfg) == doctest::Approx(1e-4).epsilon(1e-10));
}

TEST_CASE("correction shrinks marginal instruments toward zero") {
  const SelectionConfig cfg{5.4513, 0.5, 1};
  const auto rb = rao_blackwell_gamma(0.05, 0.01, cfg);
  CHECK(rb.gamma_rb < 0.05);
  CHECK(rb.gamma_rb > 0.0);
  CHECK(rao_blackwell_variance(0.05, 0.01, cfg) > 0);
}

TEST_CASE("conditional unbiasedness under the randomised rule") {
  // gamma sits right at the threshold, where the naive winner's curse is large.
  const double gamma = 0.045, sigma = 0.01;
  const SelectionConfig cfg{4.0556, 0.5, 1};
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n01(0, 1);
  CompensatedSum<double> rb_sum, naive_sum, rb_sq;
  int selected = 0;
  for (int i = 0; i < 400000; ++i) {
    const double gh = gamma + sigma * n01(rng);
    const double z = cfg.eta * n01(rng);
    if (std::abs(gh / sigma + z) <= cfg.lambda) continue;
    const double rb = rao_blackwell_gamma(gh, sigma, cfg).gamma_rb;
    rb_sum += rb;
    rb_sq += rb * rb;
    naive_sum += gh;
    ++selected;
  }
  const double mean = rb_sum.value() / selected;
  const double sd = std::sqrt(rb_sq.value() / selected - mean * mean);
  CHECK(std::abs(mean - gamma) < 3 * sd / std::sqrt(double(selected)));
  CHECK(naive_sum.value() / selected - gamma > 10 * sd / std::sqrt(double(selected)));
}

TEST_CASE("degenerate selection probability raises") {
  const SelectionConfig cfg{40.0, 1.0, 1};
  CHECK_THROWS_WITH(rao_blackwell_gamma(0.0, 0.01, cfg), "selection probability underflow");
}

TEST_CASE("random selection is reproducible and strict") {
  const int n = 2000;
  Vector<double> g(n), s(n), bg(n), sy(n);
  std::vector<std::string> ids;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01(0, 1);
  for (int i = 0; i < n; ++i) {
    g[i] = 0.04 * n01(rng);
    s[i] = 0.01;
    bg[i] = 0.2 * g[i] + 0.01 * n01(rng);
    sy[i] = 0.01;
    ids.push_back("s" + std::to_string(i));
  }
  const SummaryDataset ds(ids, g, s, bg, sy);
  const SelectionConfig cfg{4.0556, 0.5, 9};
  const auto a = select_random(ds, cfg);
  const auto b = select_random(ds, cfg);
  REQUIRE(a.size() > 10);
  CHECK(a.source_index == b.source_index);
  CHECK(a.gamma_rb == b.gamma_rb);
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const auto i = a.source_index[static_cast<std::size_t>(k)];
    CHECK(std::abs(g[i] / s[i] + a.z_noise[k]) > cfg.lambda);
    CHECK(a.z_noise[k] == selection_noise(cfg.seed, static_cast<std::uint64_t>(i), cfg.eta));
    CHECK(a.record(k).snp.snp_id == ids[static_cast<std::size_t>(i)]);
  }
  const auto other = select_random(ds, SelectionConfig{4.0556, 0.5, 10});
  CHECK(other.source_index != a.source_index);

  const auto all = select_random(ds, SelectionConfig{0.0, 0.5, 9});
  CHECK(all.size() == n);
  CHECK(all.gamma_rb == g);

  const auto fixed = select_fixed(ds, 4.0);
  for (Eigen::Index k = 0; k < fixed.size(); ++k) CHECK(std::abs(fixed.gamma_hat()[k]) > 0.04);
  CHECK(select_fixed(ds, 0.0).size() == n);
}

TEST_CASE("selection config validation") {
  CHECK_THROWS_AS((SelectionConfig{1.0, 0.0, 1}.validate()), InputError);
  CHECK_THROWS_AS((SelectionConfig{-1.0, 0.5, 1}.validate()), InputError);
}
