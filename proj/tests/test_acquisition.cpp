#include <doctest.h>

#include <cmath>
#include <vector>

#include "bora/acquisition.hpp"
#include "bora/errors.hpp"

using namespace bora;

namespace {

KernelSpec spec_for(KernelKind kind, Eigen::VectorXd ls, double sf = 1.0, double noise = 1e-2) {
  KernelSpec s;
  s.kind = kind;
  s.signal_variance = sf;
  s.lengthscales = std::move(ls);
  s.noise_variance = noise;
  return s;
}

// Five noisy observations along x1 + x2 = 33.9.
GpModel segment_model() {
  const double b = 33.9;
  std::vector<Eigen::VectorXd> xs;
  const std::vector<double> x1{3.0, 12.0, 20.0, 27.5, 31.0};
  const std::vector<double> y{0.0, 1.0, 1.0, 2.0, 1.0};
  for (double v : x1) xs.push_back(Eigen::Vector2d(v, b - v));
  return GpModel(spec_for(KernelKind::se_anisotropic, Eigen::Vector2d(6.0, 6.0), 0.5, 0.2), xs,
                 Eigen::Map<const Eigen::VectorXd>(y.data(), 5));
}

}  // namespace

TEST_CASE("ucb scoring") {
  const std::vector<Eigen::VectorXd> xs{Eigen::Vector2d(0.2, 0.8), Eigen::Vector2d(0.7, 0.3)};
  const GpModel g(spec_for(KernelKind::se_isotropic, Eigen::VectorXd::Constant(1, 0.3)), xs,
                  Eigen::Vector2d(1.0, -0.5));
  const Eigen::Vector2d q(0.5, 0.5);
  CHECK(ucb(g, q, 0.0) == g.posterior(q).mean);
  double previous = ucb(g, q, 0.0);
  for (double beta : {0.1, 0.5, 1.0, 4.0, 25.0}) {
    const double v = ucb(g, q, beta);
    CHECK(v >= previous);
    previous = v;
  }
  CHECK_THROWS_AS(ucb(g, q, -1e-9), DomainError);

  // mu = 1, sigma = 0.5: prior with offset 1 and variance 0.25.
  const GpModel p(spec_for(KernelKind::se_isotropic, Eigen::VectorXd::Ones(1), 0.25, 0.0),
                  {Eigen::Vector2d(100.0, 100.0)}, Eigen::VectorXd::Zero(1), {1.0, 1.0});
  CHECK(ucb(p, Eigen::Vector2d(0.0, 0.0), 4.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("beta schedules") {
  Rng rng(5);
  CHECK(sample_beta(1, BetaSchedule::fixed(2.0), rng) == 2.0);
  CHECK(sample_beta(50, BetaSchedule::fixed(0.0), rng) == 0.0);
  CHECK_THROWS_AS(BetaSchedule::fixed(-1.0), DomainError);
  CHECK_THROWS_AS(sample_beta(0, BetaSchedule::randomized(), rng), DomainError);

  double sum = 0.0;
  bool nonnegative = true;
  for (int k = 0; k < 10000; ++k) {
    const double b = sample_beta(1, BetaSchedule::randomized(), rng);
    nonnegative = nonnegative && b >= 0.0;
    sum += b;
  }
  CHECK(nonnegative);
  CHECK(std::abs(sum / 10000.0 / (2.0 * std::log(2.0)) - 1.0) < 0.05);

  sum = 0.0;
  for (int k = 0; k < 10000; ++k) sum += sample_beta(99, BetaSchedule::randomized(), rng);
  CHECK(std::abs(sum / 10000.0 / (2.0 * std::log(100.0)) - 1.0) < 0.05);
}

TEST_CASE("budget maximizer on an untrained model stays feasible") {
  Rng rng(1);
  const auto g = GpModel::prior(spec_for(KernelKind::se_anisotropic, Eigen::VectorXd::Ones(4)), 4);
  const auto x = maximize_ucb_budget(g, 12.5, 2.0, rng);
  CHECK(x.size() == 4);
  CHECK(std::abs(x.amounts().sum() - 12.5) <= 1e-9);
  CHECK(x.amounts().minCoeff() >= 0.0);
  CHECK_THROWS_AS(maximize_ucb_budget(g, 0.0, 2.0, rng), DomainError);
  CHECK_THROWS_AS(maximize_ucb_budget(g, 1.0, -2.0, rng), DomainError);
}

TEST_CASE("budget maximizer matches a grid over the constraint segment") {
  const auto g = segment_model();
  const double b = 33.9;
  for (double beta : {0.0, 1.0, 4.0, 9.0}) {
    double grid_best = -1e300;
    for (int k = 0; k <= 33900; ++k) {
      const double x1 = std::min(b, k * 1e-3);
      grid_best = std::max(grid_best, ucb(g, Eigen::Vector2d(x1, b - x1), beta));
    }
    Rng rng(17);
    const auto x = maximize_ucb_budget(g, b, beta, rng);
    CHECK(std::abs(x.amounts().sum() - b) <= 1e-9);
    CHECK(ucb(g, x.amounts(), beta) >= grid_best - 1e-4);
  }
}

TEST_CASE("budget maximizer finds a corner optimum") {
  const double b = 20.0;
  const GpModel g(spec_for(KernelKind::se_anisotropic, Eigen::Vector2d(5.0, 5.0), 1.0, 1e-4),
                  {Eigen::Vector2d(b, 0.0)}, Eigen::VectorXd::Constant(1, 3.0));
  double grid_arg = 0.0, grid_best = -1e300;
  for (int k = 0; k <= 20000; ++k) {
    const double x1 = k * 1e-3;
    const double v = ucb(g, Eigen::Vector2d(x1, b - x1), 0.0);
    if (v > grid_best) grid_best = v, grid_arg = x1;
  }
  CHECK(grid_arg == doctest::Approx(b));
  Rng rng(2);
  const auto x = maximize_ucb_budget(g, b, 0.0, rng);
  CHECK(x[0] == doctest::Approx(b).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("simplex maximizer") {
  SUBCASE("untrained model") {
    Rng rng(3);
    const auto g = GpModel::prior(spec_for(KernelKind::wasserstein_se, Eigen::VectorXd::Ones(1)), 5);
    const auto a = maximize_ucb_simplex(g, 1.0, rng);
    CHECK(a.size() == 5);
    CHECK(std::abs(a.values().sum() - 1.0) <= 1e-9);
  }
  SUBCASE("matches a grid on the 1-simplex") {
    std::vector<Eigen::VectorXd> xs;
    const std::vector<double> a1{0.05, 0.3, 0.55, 0.7, 0.95};
    const std::vector<double> y{0.2, 1.1, 0.4, 1.6, 0.3};
    for (double v : a1) xs.push_back(Eigen::Vector2d(v, 1.0 - v));
    for (auto kind : {KernelKind::se_anisotropic, KernelKind::wasserstein_se}) {
      const auto ls = kind == KernelKind::se_anisotropic ? Eigen::VectorXd(Eigen::Vector2d(0.15, 0.15))
                                                         : Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.1));
      const GpModel g(spec_for(kind, ls, 1.0, 0.05), xs, Eigen::Map<const Eigen::VectorXd>(y.data(), 5));
      for (double beta : {0.0, 2.0, 8.0}) {
        double grid_best = -1e300;
        for (int k = 0; k <= 10000; ++k) {
          const double t = k * 1e-4;
          grid_best = std::max(grid_best, ucb(g, Eigen::Vector2d(t, 1.0 - t), beta));
        }
        Rng rng(9);
        const auto a = maximize_ucb_simplex(g, beta, rng);
        CHECK(ucb(g, a.values(), beta) >= grid_best - 1e-4);
      }
    }
  }
  SUBCASE("peak at the barycentre of the 2-simplex") {
    const Eigen::Vector3d centre = Eigen::Vector3d::Constant(1.0 / 3.0);
    const GpModel g(spec_for(KernelKind::se_anisotropic, Eigen::Vector3d(0.3, 0.3, 0.3), 1.0, 1e-3), {centre},
                    Eigen::VectorXd::Constant(1, 1.0));
    Rng oracle_rng(123);
    double best = -1e300;
    Eigen::VectorXd best_point;
    for (int k = 0; k < 1000000; ++k) {
      const auto a = sample_uniform_simplex(3, oracle_rng);
      const double v = ucb(g, a.values(), 0.0);
      if (v > best) best = v, best_point = a.values();
    }
    CHECK((best_point - centre).cwiseAbs().sum() < 0.05);
    Rng rng(4);
    const auto a = maximize_ucb_simplex(g, 0.0, rng);
    CHECK((a.values() - centre).cwiseAbs().sum() < 0.05);
  }
  SUBCASE("reproducible for a fixed seed") {
    const auto g = segment_model();
    Rng r1(44), r2(44);
    CHECK(maximize_ucb_budget(g, 33.9, 3.0, r1) == maximize_ucb_budget(g, 33.9, 3.0, r2));
  }
}
