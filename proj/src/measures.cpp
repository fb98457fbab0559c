#include "bora/measures.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "bora/errors.hpp"

namespace bora {
namespace {

Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

WeightVector::WeightVector(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2) throw InvariantError("weight vector needs dimension >= 2");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      std::ostringstream msg;
      msg << "weight " << i << " is " << weights_[i] << ", expected a nonnegative number";
      throw InvariantError(msg.str());
    }
  }
  const double sum = weights_.sum();
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weights sum to " << sum << ", expected 1";
    throw InvariantError(msg.str());
  }
}

WeightVector::WeightVector(std::span<const double> weights) : WeightVector(to_eigen(weights)) {}

AllocationDecision::AllocationDecision(Eigen::VectorXd amounts, double budget)
    : amounts_(std::move(amounts)), budget_(budget) {
  if (!(budget_ > 0.0) || !std::isfinite(budget_)) {
    throw DomainError("allocation budget must be positive and finite");
  }
  if (amounts_.size() < 1) throw InvariantError("allocation has no arms");
  for (Eigen::Index i = 0; i < amounts_.size(); ++i) {
    if (!std::isfinite(amounts_[i]) || amounts_[i] < 0.0) {
      std::ostringstream msg;
      msg << "amount " << i << " is " << amounts_[i] << ", expected a nonnegative number";
      throw InvariantError(msg.str());
    }
  }
  const double sum = amounts_.sum();
  if (std::abs(sum - budget_) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "amounts sum to " << sum << " but budget is " << budget_;
    throw InvariantError(msg.str());
  }
}

AllocationDecision::AllocationDecision(std::span<const double> amounts, double budget)
    : AllocationDecision(to_eigen(amounts), budget) {}

WeightVector to_weight_vector(const AllocationDecision& x) {
  return WeightVector(Eigen::VectorXd(x.amounts() / x.budget()));
}

AllocationDecision from_weight_vector(const WeightVector& a, double budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw DomainError("budget must be positive and finite");
  }
  // Renormalize so the equality constraint holds at any budget scale.
  return AllocationDecision(Eigen::VectorXd(a.values() * (budget / a.values().sum())), budget);
}

double wasserstein_p_raw(const Eigen::Ref<const Eigen::VectorXd>& a,
                         const Eigen::Ref<const Eigen::VectorXd>& b, double p) {
  const double moved = 0.5 * (a - b).cwiseAbs().sum();
  return p == 1.0 ? moved : std::pow(moved, 1.0 / p);
}

double wasserstein_p(const WeightVector& a, const WeightVector& b, double p) {
  if (a.size() != b.size()) throw DomainError("wasserstein_p: dimension mismatch");
  if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("wasserstein_p: p must be in (0, inf)");
  return wasserstein_p_raw(a.values(), b.values(), p);
}

WeightVector sample_uniform_simplex(int m, Rng& rng) {
  if (m < 2) throw DomainError("sample_uniform_simplex: m must be >= 2");
  std::exponential_distribution<double> unit_exp(1.0);
  Eigen::VectorXd draws(m);
  for (int i = 0; i < m; ++i) draws[i] = unit_exp(rng);
  draws /= draws.sum();
  // Absorb rounding so the sum is 1 to the last ulp where possible.
  const double drift = 1.0 - draws.sum();
  Eigen::Index largest;
  draws.maxCoeff(&largest);
  draws[largest] += drift;
  return WeightVector(std::move(draws));
}

WeightVector project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index m = v.size();
  if (m < 2) throw DomainError("project_to_simplex: dimension must be >= 2");
  std::vector<double> sorted(v.data(), v.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) threshold = candidate;
  }
  Eigen::VectorXd out = (v.array() - threshold).cwiseMax(0.0);
  const double sum = out.sum();
  if (sum > 0.0) out /= sum;
  return WeightVector(std::move(out));
}

}  // namespace bora
