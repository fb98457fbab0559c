#pragma once

// Probability-simplex geometry for budget allocations.
//
// An allocation x of budget b over m arms corresponds to the weight vector
// a = x / b of a discrete probability measure supported on {1, ..., m}.
// Under the binary ground metric (moving unit mass between distinct support
// points costs 1) the Wasserstein distance between two such measures has the
// closed form W_p(a, a') = (1/2 * sum_i |a_i - a'_i|)^(1/p).

#include <span>
#include <vector>

#include <Eigen/Core>

#include "bora/rng.hpp"

namespace bora {

inline constexpr double kSimplexTolerance = 1e-9;

// A point of the (m-1)-simplex. Construction validates nonnegativity, unit
// sum (within kSimplexTolerance) and m >= 2.
class WeightVector {
public:
  explicit WeightVector(Eigen::VectorXd weights);
  explicit WeightVector(std::span<const double> weights);

  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[i]; }
  const Eigen::VectorXd& values() const { return weights_; }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
  Eigen::VectorXd weights_;
};

// Nonnegative split of a positive budget; amounts sum to the budget within
// kSimplexTolerance.
class AllocationDecision {
public:
  AllocationDecision(Eigen::VectorXd amounts, double budget);
  AllocationDecision(std::span<const double> amounts, double budget);

  int size() const { return static_cast<int>(amounts_.size()); }
  double operator[](int i) const { return amounts_[i]; }
  const Eigen::VectorXd& amounts() const { return amounts_; }
  double budget() const { return budget_; }

  friend bool operator==(const AllocationDecision&, const AllocationDecision&) = default;

private:
  Eigen::VectorXd amounts_;
  double budget_;
};

WeightVector to_weight_vector(const AllocationDecision& x);
AllocationDecision from_weight_vector(const WeightVector& a, double budget);

// Closed-form W_p under the binary ground metric. Default p = 1.
double wasserstein_p(const WeightVector& a, const WeightVector& b, double p = 1.0);

// Unchecked variant for hot loops (kernel evaluation); inputs are assumed to be
// simplex points of equal dimension.
double wasserstein_p_raw(const Eigen::Ref<const Eigen::VectorXd>& a,
                         const Eigen::Ref<const Eigen::VectorXd>& b, double p);

// Flat Dirichlet draw via normalized unit-rate exponentials.
WeightVector sample_uniform_simplex(int m, Rng& rng);

// Euclidean projection onto the simplex (sort-and-threshold).
WeightVector project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace bora
