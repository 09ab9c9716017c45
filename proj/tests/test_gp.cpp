#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "chipletdse/gp.hpp"

using namespace chipletdse;

namespace {

// Small 1D training set on the normalized input domain.
std::vector<std::vector<double>> train_x() {
  return {{0.0}, {0.25}, {0.5}, {0.75}, {1.0}};
}
std::vector<double> train_y() { return {0.0, 0.3, 0.1, -0.4, 0.2}; }

}  // namespace

TEST_CASE("normal density and distribution") {
  REQUIRE(normal_pdf(0.0) == Catch::Approx(0.3989422804014327).epsilon(1e-14));
  REQUIRE(normal_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-14));
  REQUIRE(normal_cdf(1.96) == Catch::Approx(0.9750021048517795).epsilon(1e-12));
  for (double z : {-2.0, -0.5, 0.3, 1.7}) {
    REQUIRE(normal_cdf(z) + normal_cdf(-z) == Catch::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("expected improvement closed form") {
  // gamma = 1: EI = Phi(1) + phi(1).
  REQUIRE(expected_improvement(0.0, 1.0, 1.0) ==
          Catch::Approx(1.0833154705876863).epsilon(1e-12));
  // Scale equivariance: EI(s*mu, s*sigma, s*best) = s * EI(mu, sigma, best).
  REQUIRE(expected_improvement(0.0, 2.5, 2.5) ==
          Catch::Approx(2.5 * 1.0833154705876863).epsilon(1e-12));
  // Degenerate sigma collapses to deterministic improvement.
  REQUIRE(expected_improvement(3.0, 0.0, 5.0) == 2.0);
  REQUIRE(expected_improvement(5.0, 0.0, 3.0) == 0.0);
  REQUIRE(expected_improvement(1.0, -1.0, 2.0) == 1.0);
}

TEST_CASE("expected improvement matches Monte Carlo") {
  const double mean = 2.0, sigma = 1.5, f_best = 2.5;
  std::mt19937 rng(1234);
  std::normal_distribution<double> dist(mean, sigma);
  const int n = 2000000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::max(f_best - dist(rng), 0.0);
  double mc = acc / n;
  REQUIRE(expected_improvement(mean, sigma, f_best) == Catch::Approx(mc).margin(5e-3));
}

TEST_CASE("gp interpolates training data at low noise") {
  // Inputs spread wide relative to every candidate length scale keep the
  // kernel matrix well conditioned, where the posterior mean must pass through
  // the data whatever hyperparameters the marginal-likelihood search picks.
  std::vector<std::vector<double>> xs = {{0.0}, {3.0}, {6.0}, {9.0}, {12.0}};
  std::vector<double> ys = train_y();
  GpModel gp(1e-10);
  gp.fit(xs, ys);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    GpPrediction p = gp.predict(xs[i]);
    REQUIRE(p.mean == Catch::Approx(ys[i]).margin(1e-6));
    REQUIRE(p.variance < 1e-6 * gp.signal_variance() + 1e-9);
  }
  // On tightly clustered inputs the factorization needs real jitter and
  // interpolation is only approximate; pin the degradation envelope.
  GpModel clustered(1e-10);
  clustered.fit(train_x(), train_y());
  auto cx = train_x();
  auto cy = train_y();
  for (std::size_t i = 0; i < cx.size(); ++i)
    REQUIRE(clustered.predict(cx[i]).mean == Catch::Approx(cy[i]).margin(2e-2));
}

TEST_CASE("gp reverts to the prior far from data") {
  GpModel gp;
  gp.fit(train_x(), train_y());
  GpPrediction p = gp.predict({50.0});
  REQUIRE(p.mean == Catch::Approx(gp.prior_mean()).margin(1e-9));
  REQUIRE(p.variance == Catch::Approx(gp.signal_variance()).epsilon(1e-9));
  double mean_y = 0.0;
  for (double v : train_y()) mean_y += v;
  mean_y /= 5.0;
  REQUIRE(gp.prior_mean() == Catch::Approx(mean_y).epsilon(1e-14));
}

TEST_CASE("gp fit is deterministic") {
  GpModel a, b;
  a.fit(train_x(), train_y());
  b.fit(train_x(), train_y());
  for (double q : {0.1, 0.37, 0.62, 0.9}) {
    GpPrediction pa = a.predict({q});
    GpPrediction pb = b.predict({q});
    REQUIRE(pa.mean == pb.mean);
    REQUIRE(pa.variance == pb.variance);
  }
  REQUIRE(a.length_scale() == b.length_scale());
  REQUIRE(a.signal_variance() == b.signal_variance());
}

TEST_CASE("model overload of expected improvement uses the prediction") {
  GpModel gp;
  gp.fit(train_x(), train_y());
  std::vector<double> q{0.4};
  GpPrediction p = gp.predict(q);
  REQUIRE(expected_improvement(gp, q, 0.05) ==
          expected_improvement(p.mean, std::sqrt(p.variance), 0.05));
}

TEST_CASE("gp rejects bad inputs") {
  GpModel gp;
  REQUIRE_THROWS_AS(gp.fit({}, {}), ValidationError);
  REQUIRE_THROWS_AS(gp.fit({{0.0}, {1.0}}, {0.5}), ValidationError);
  REQUIRE_THROWS_AS(gp.predict({0.5}), ValidationError);
}

TEST_CASE("higher surrogate uncertainty raises expected improvement") {
  // For mean above f_best, EI grows with sigma.
  double prev = expected_improvement(1.0, 0.01, 0.5);
  for (double s : {0.1, 0.5, 1.0, 2.0}) {
    double ei = expected_improvement(1.0, s, 0.5);
    REQUIRE(ei > prev);
    prev = ei;
  }
}
