#pragma once

// Gaussian-process regression with squared-exponential kernels.
//
// Two kernel families are supported:
//   SE                k(x, x')  = sf * exp(-1/2 * sum_i (x_i - x'_i)^2 / l_i^2)
//   Wasserstein-SE    k(a, a')  = sf * exp(-1/2 * W_p(a, a')^2 / lambda^2)
// where sf is the signal variance (k(x, x) = sf) and W_p is the closed-form
// binary-ground-metric Wasserstein distance between simplex points.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bora/measures.hpp"
#include "bora/rng.hpp"

namespace bora {

enum class KernelKind { se_isotropic, se_anisotropic, wasserstein_se };

const char* to_string(KernelKind kind);

struct KernelSpec {
  KernelKind kind = KernelKind::se_anisotropic;
  double signal_variance = 1.0;
  // One entry for se_isotropic and wasserstein_se (lambda), one per input
  // dimension for se_anisotropic.
  Eigen::VectorXd lengthscales = Eigen::VectorXd::Ones(1);
  double noise_variance = 0.0;
  // Order of the Wasserstein distance; ignored by SE kinds. W_p^2 = TV^(2/p),
  // so the kernel is positive definite only for p >= 2 once m > 2.
  double wasserstein_p = 2.0;

  // Throws DomainError when a hyperparameter is out of range or the number of
  // lengthscales does not fit the kind (and input_dim, when given).
  void validate(std::optional<int> input_dim = std::nullopt) const;
};

double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& x2, const KernelSpec& spec);
double wse_kernel(const WeightVector& a, const WeightVector& a2, const KernelSpec& spec);

// Kind-dispatching evaluation on raw coordinates. Wasserstein-SE inputs are
// taken to be simplex points without revalidation.
double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& x2);

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, std::span<const Eigen::VectorXd> inputs);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Affine map applied to GP outputs: reported = offset + scale * latent.
struct OutputScaling {
  double offset = 0.0;
  double scale = 1.0;
};

// Diagonal jitter ladder tried when K + noise*I fails to factor.
inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

// A GP conditioned on a training set with fixed hyperparameters. Immutable;
// posterior queries are safe to run concurrently.
class GpModel {
public:
  // Throws FitError when no jitter up to kJitterMax makes the Gram matrix
  // factorable, DomainError on shape mismatch.
  GpModel(KernelSpec spec, std::vector<Eigen::VectorXd> inputs, Eigen::VectorXd targets,
          OutputScaling scaling = {});

  // Unconditioned model over inputs of the given dimension.
  static GpModel prior(KernelSpec spec, int input_dim);

  Posterior posterior(const Eigen::Ref<const Eigen::VectorXd>& query) const;

  // Gaussian log marginal likelihood of targets() under the kernel plus noise.
  double log_marginal_likelihood() const { return log_marginal_likelihood_; }

  const KernelSpec& spec() const { return spec_; }
  int input_dim() const { return input_dim_; }
  int size() const { return static_cast<int>(inputs_.size()); }
  const std::vector<Eigen::VectorXd>& inputs() const { return inputs_; }
  // Targets in the latent (possibly standardized) scale the GP was fit on.
  const Eigen::VectorXd& targets() const { return targets_; }
  const OutputScaling& scaling() const { return scaling_; }
  // Jitter that was added to the diagonal on top of the noise variance.
  double jitter() const { return jitter_; }

private:
  GpModel(KernelSpec spec, int input_dim);

  KernelSpec spec_;
  int input_dim_ = 0;
  std::vector<Eigen::VectorXd> inputs_;
  Eigen::VectorXd targets_;
  OutputScaling scaling_;
  Eigen::MatrixXd factor_;  // lower Cholesky factor of K + (noise + jitter) I
  Eigen::VectorXd alpha_;   // (K + (noise + jitter) I)^-1 targets
  double jitter_ = 0.0;
  double log_marginal_likelihood_ = 0.0;
};

struct FitOptions {
  int starts = 8;
  int max_evals_per_start = 200;
  double noise_floor = 1e-6;
  double wasserstein_p = 2.0;
  // Pattern-search step in natural-log units and the step at which a start stops.
  double initial_step = 1.0;
  double min_step = 1e-3;
  // Search box: signal variance in standardized target units, lengthscales
  // relative to each input range, noise variance from noise_floor up.
  double min_signal = 5e-2;
  double max_signal = 1e2;
  double min_relative_lengthscale = 1e-1;
  double max_relative_lengthscale = 1e2;
  double max_noise = 1e1;
};

// Hyperparameters used for the first (deterministic) start: sf = 1,
// lengthscales at 20% of each input range, noise 1e-4 (or the floor if higher).
KernelSpec default_initial_spec(std::span<const Eigen::VectorXd> inputs, KernelKind kind,
                                const FitOptions& options = {});

// Standardizes targets, then maximizes the log marginal likelihood over
// log-hyperparameters by multi-start pattern search. The returned model
// reports posteriors in the original target scale.
GpModel fit_gp(std::span<const Eigen::VectorXd> inputs, std::span<const double> targets,
               KernelKind kind, Rng& rng, const FitOptions& options = {});

}  // namespace bora
