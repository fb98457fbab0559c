#include "bora/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bora/errors.hpp"

namespace bora {

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::se_isotropic: return "se_isotropic";
    case KernelKind::se_anisotropic: return "se_anisotropic";
    case KernelKind::wasserstein_se: return "wasserstein_se";
  }
  return "unknown";
}

void KernelSpec::validate(std::optional<int> input_dim) const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw DomainError("kernel signal variance must be positive");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw DomainError("kernel noise variance must be nonnegative");
  }
  if (lengthscales.size() < 1) throw DomainError("kernel needs at least one lengthscale");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) {
      throw DomainError("kernel lengthscales must be positive");
    }
  }
  if (kind == KernelKind::se_anisotropic) {
    if (input_dim && lengthscales.size() != *input_dim && lengthscales.size() != 1) {
      throw DomainError("anisotropic kernel needs one lengthscale per input dimension");
    }
  } else if (lengthscales.size() != 1) {
    throw DomainError(std::string(to_string(kind)) + " kernel carries exactly one scale");
  }
  if (kind == KernelKind::wasserstein_se && !(wasserstein_p > 0.0)) {
    throw DomainError("Wasserstein order p must be positive");
  }
}

double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& x2, const KernelSpec& spec) {
  if (x.size() != x2.size()) throw DomainError("se_kernel: dimension mismatch");
  if (spec.kind == KernelKind::wasserstein_se) {
    throw DomainError("se_kernel called with a Wasserstein-SE spec");
  }
  double exponent = 0.0;
  if (spec.lengthscales.size() == 1) {
    const double l = spec.lengthscales[0];
    exponent = (x - x2).squaredNorm() / (l * l);
  } else {
    if (spec.lengthscales.size() != x.size()) {
      throw DomainError("se_kernel: lengthscale count does not match input dimension");
    }
    exponent = ((x - x2).array() / spec.lengthscales.array()).square().sum();
  }
  return spec.signal_variance * std::exp(-0.5 * exponent);
}

double wse_kernel(const WeightVector& a, const WeightVector& a2, const KernelSpec& spec) {
  if (spec.kind != KernelKind::wasserstein_se) {
    throw DomainError("wse_kernel called with a non-Wasserstein spec");
  }
  const double w = wasserstein_p(a, a2, spec.wasserstein_p);
  const double lambda = spec.lengthscales[0];
  return spec.signal_variance * std::exp(-0.5 * w * w / (lambda * lambda));
}

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& x2) {
  if (spec.kind == KernelKind::wasserstein_se) {
    if (x.size() != x2.size()) throw DomainError("kernel: dimension mismatch");
    const double w = wasserstein_p_raw(x, x2, spec.wasserstein_p);
    const double lambda = spec.lengthscales[0];
    return spec.signal_variance * std::exp(-0.5 * w * w / (lambda * lambda));
  }
  return se_kernel(x, x2, spec);
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, std::span<const Eigen::VectorXd> inputs) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = kernel_value(spec, inputs[i], inputs[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      gram(i, j) = gram(j, i) = kernel_value(spec, inputs[i], inputs[j]);
    }
  }
  return gram;
}

namespace {

struct Factorization {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// Cholesky of gram + noise*I, escalating diagonal jitter on failure.
std::optional<Factorization> factorize(const Eigen::MatrixXd& gram, double noise) {
  const auto n = gram.rows();
  Eigen::MatrixXd work = gram;
  work.diagonal().array() += noise;
  Eigen::LLT<Eigen::MatrixXd> llt(work);
  if (llt.info() == Eigen::Success) return Factorization{llt.matrixL(), 0.0};
  for (double jitter = kJitterStart; jitter <= kJitterMax * (1.0 + 1e-12); jitter *= 10.0) {
    work = gram;
    work.diagonal().array() += noise + jitter;
    llt.compute(work);
    if (llt.info() == Eigen::Success) return Factorization{llt.matrixL(), jitter};
  }
  (void)n;
  return std::nullopt;
}

// (L L^T)^-1 b for a lower Cholesky factor L.
Eigen::VectorXd cholesky_solve(const Eigen::MatrixXd& lower, const Eigen::VectorXd& b) {
  const Eigen::VectorXd half = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(half);
}

double log_likelihood_from(const Eigen::MatrixXd& lower, const Eigen::VectorXd& targets,
                           const Eigen::VectorXd& alpha) {
  const auto n = static_cast<double>(targets.size());
  const double log_det_half = lower.diagonal().array().log().sum();
  return -0.5 * targets.dot(alpha) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace

GpModel::GpModel(KernelSpec spec, int input_dim) : spec_(std::move(spec)), input_dim_(input_dim) {}

GpModel GpModel::prior(KernelSpec spec, int input_dim) {
  if (input_dim < 1) throw DomainError("GP input dimension must be positive");
  spec.validate(input_dim);
  return GpModel(std::move(spec), input_dim);
}

GpModel::GpModel(KernelSpec spec, std::vector<Eigen::VectorXd> inputs, Eigen::VectorXd targets,
                 OutputScaling scaling)
    : spec_(std::move(spec)),
      inputs_(std::move(inputs)),
      targets_(std::move(targets)),
      scaling_(scaling) {
  if (inputs_.empty()) throw DomainError("GpModel needs at least one training input");
  if (static_cast<Eigen::Index>(inputs_.size()) != targets_.size()) {
    throw DomainError("GpModel: number of inputs and targets differ");
  }
  input_dim_ = static_cast<int>(inputs_.front().size());
  for (const auto& x : inputs_) {
    if (x.size() != input_dim_) throw DomainError("GpModel: inconsistent input dimensions");
  }
  if (!targets_.allFinite()) throw DomainError("GpModel: targets must be finite");
  spec_.validate(input_dim_);

  const Eigen::MatrixXd gram = gram_matrix(spec_, inputs_);
  auto fact = factorize(gram, spec_.noise_variance);
  if (!fact) {
    throw FitError("Gram matrix is not positive definite even with jitter " +
                   std::to_string(kJitterMax));
  }
  factor_ = std::move(fact->lower);
  jitter_ = fact->jitter;
  alpha_ = cholesky_solve(factor_, targets_);
  log_marginal_likelihood_ = log_likelihood_from(factor_, targets_, alpha_);
}

Posterior GpModel::posterior(const Eigen::Ref<const Eigen::VectorXd>& query) const {
  if (query.size() != input_dim_) throw DomainError("posterior: query dimension mismatch");
  const double prior_variance = spec_.signal_variance;
  if (inputs_.empty()) {
    return {scaling_.offset, scaling_.scale * scaling_.scale * prior_variance};
  }
  const auto n = static_cast<Eigen::Index>(inputs_.size());
  Eigen::VectorXd cross(n);
  for (Eigen::Index i = 0; i < n; ++i) cross[i] = kernel_value(spec_, query, inputs_[i]);
  const double latent_mean = cross.dot(alpha_);
  factor_.triangularView<Eigen::Lower>().solveInPlace(cross);
  const double latent_variance = std::max(0.0, prior_variance - cross.squaredNorm());
  return {scaling_.offset + scaling_.scale * latent_mean,
          scaling_.scale * scaling_.scale * latent_variance};
}

// ---------------------------------------------------------------------------
// Hyperparameter fitting

namespace {

// Pairwise quantities that do not depend on hyperparameters.
class DistanceCache {
public:
  DistanceCache(std::span<const Eigen::VectorXd> inputs, KernelKind kind, double p)
      : kind_(kind) {
    const auto n = static_cast<Eigen::Index>(inputs.size());
    const auto dim = inputs.front().size();
    if (kind == KernelKind::se_anisotropic) {
      per_dim_.assign(static_cast<std::size_t>(dim), Eigen::MatrixXd::Zero(n, n));
      for (Eigen::Index d = 0; d < dim; ++d) {
        auto& sq = per_dim_[static_cast<std::size_t>(d)];
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < i; ++j) {
            const double diff = inputs[i][d] - inputs[j][d];
            sq(i, j) = sq(j, i) = diff * diff;
          }
        }
      }
    } else {
      total_ = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
          double sq = 0.0;
          if (kind == KernelKind::wasserstein_se) {
            const double w = wasserstein_p_raw(inputs[i], inputs[j], p);
            sq = w * w;
          } else {
            sq = (inputs[i] - inputs[j]).squaredNorm();
          }
          total_(i, j) = total_(j, i) = sq;
        }
      }
    }
  }

  Eigen::MatrixXd gram(const KernelSpec& spec) const {
    Eigen::MatrixXd scaled;
    if (kind_ == KernelKind::se_anisotropic) {
      scaled = Eigen::MatrixXd::Zero(per_dim_.front().rows(), per_dim_.front().cols());
      for (std::size_t d = 0; d < per_dim_.size(); ++d) {
        const double l = spec.lengthscales.size() == 1
                             ? spec.lengthscales[0]
                             : spec.lengthscales[static_cast<Eigen::Index>(d)];
        scaled += per_dim_[d] / (l * l);
      }
    } else {
      const double l = spec.lengthscales[0];
      scaled = total_ / (l * l);
    }
    return spec.signal_variance * (-0.5 * scaled.array()).exp().matrix();
  }

  // Largest pairwise distance (Wasserstein-SE only).
  double max_distance() const { return std::sqrt(total_.maxCoeff()); }

private:
  KernelKind kind_;
  std::vector<Eigen::MatrixXd> per_dim_;
  Eigen::MatrixXd total_;
};

struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// Log-parameter layout: [log sf, log l_1..l_k, log noise].
Eigen::VectorXd pack(const KernelSpec& spec) {
  const auto k = spec.lengthscales.size();
  Eigen::VectorXd theta(k + 2);
  theta[0] = std::log(spec.signal_variance);
  theta.segment(1, k) = spec.lengthscales.array().log();
  theta[k + 1] = std::log(spec.noise_variance);
  return theta;
}

KernelSpec unpack(const Eigen::VectorXd& theta, const KernelSpec& shape) {
  KernelSpec spec = shape;
  const auto k = shape.lengthscales.size();
  spec.signal_variance = std::exp(theta[0]);
  spec.lengthscales = theta.segment(1, k).array().exp();
  spec.noise_variance = std::exp(theta[k + 1]);
  return spec;
}

Eigen::VectorXd input_ranges(std::span<const Eigen::VectorXd> inputs) {
  const auto dim = inputs.front().size();
  Eigen::VectorXd lo = inputs.front();
  Eigen::VectorXd hi = inputs.front();
  for (const auto& x : inputs) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  Eigen::VectorXd range = hi - lo;
  for (Eigen::Index d = 0; d < dim; ++d) {
    if (!(range[d] > 1e-12)) range[d] = 1.0;
  }
  return range;
}

// Reference scale per lengthscale slot: input range per dimension (SE) or the
// largest pairwise Wasserstein distance (Wasserstein-SE).
Eigen::VectorXd lengthscale_scales(std::span<const Eigen::VectorXd> inputs, KernelKind kind,
                                   double p) {
  if (kind == KernelKind::se_anisotropic) return input_ranges(inputs);
  if (kind == KernelKind::se_isotropic) {
    return Eigen::VectorXd::Constant(1, input_ranges(inputs).norm());
  }
  double widest = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      widest = std::max(widest, wasserstein_p_raw(inputs[i], inputs[j], p));
    }
  }
  return Eigen::VectorXd::Constant(1, widest > 1e-12 ? widest : 1.0);
}

void check_fit_inputs(std::span<const Eigen::VectorXd> inputs, std::span<const double> targets) {
  if (inputs.size() < 2) throw DomainError("fit_gp needs at least 2 training points");
  if (inputs.size() != targets.size()) {
    throw DomainError("fit_gp: number of inputs and targets differ");
  }
  const auto dim = inputs.front().size();
  if (dim < 1) throw DomainError("fit_gp: empty input vectors");
  for (const auto& x : inputs) {
    if (x.size() != dim) throw DomainError("fit_gp: inconsistent input dimensions");
    if (!x.allFinite()) throw DomainError("fit_gp: inputs must be finite");
  }
  for (double y : targets) {
    if (!std::isfinite(y)) throw DomainError("fit_gp: targets must be finite");
  }
}

}  // namespace

KernelSpec default_initial_spec(std::span<const Eigen::VectorXd> inputs, KernelKind kind,
                                const FitOptions& options) {
  if (inputs.empty()) throw DomainError("default_initial_spec: no inputs");
  KernelSpec spec;
  spec.kind = kind;
  spec.signal_variance = 1.0;
  spec.lengthscales = 0.2 * lengthscale_scales(inputs, kind, options.wasserstein_p);
  spec.noise_variance = std::max(1e-4, options.noise_floor);
  spec.wasserstein_p = options.wasserstein_p;
  return spec;
}

GpModel fit_gp(std::span<const Eigen::VectorXd> inputs, std::span<const double> targets,
               KernelKind kind, Rng& rng, const FitOptions& options) {
  check_fit_inputs(inputs, targets);
  if (options.starts < 1 || options.max_evals_per_start < 1) {
    throw DomainError("fit_gp: starts and evaluation budget must be positive");
  }

  const auto n = static_cast<Eigen::Index>(targets.size());
  const Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
  OutputScaling scaling;
  scaling.offset = raw.mean();
  const double spread = std::sqrt((raw.array() - scaling.offset).square().sum() /
                                  static_cast<double>(n - 1));
  scaling.scale = spread > 1e-12 ? spread : 1.0;
  const Eigen::VectorXd standardized = (raw.array() - scaling.offset) / scaling.scale;

  const KernelSpec initial = default_initial_spec(inputs, kind, options);
  const Eigen::VectorXd scales = lengthscale_scales(inputs, kind, options.wasserstein_p);
  const auto k = scales.size();

  Bounds bounds{Eigen::VectorXd(k + 2), Eigen::VectorXd(k + 2)};
  bounds.lower[0] = std::log(options.min_signal);
  bounds.upper[0] = std::log(options.max_signal);
  bounds.lower.segment(1, k) = (scales.array() * options.min_relative_lengthscale).log();
  bounds.upper.segment(1, k) = (scales.array() * options.max_relative_lengthscale).log();
  bounds.lower[k + 1] = std::log(options.noise_floor);
  bounds.upper[k + 1] = std::log(std::max(options.max_noise, options.noise_floor));

  // All random starts are drawn before any evaluation so rng consumption does
  // not depend on the search trajectory.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(pack(initial).cwiseMax(bounds.lower).cwiseMin(bounds.upper));
  std::uniform_real_distribution<double> log_unit(std::log(1e-2), std::log(1e2));
  for (int s = 1; s < options.starts; ++s) {
    Eigen::VectorXd theta(k + 2);
    theta[0] = log_unit(rng);
    for (Eigen::Index d = 0; d < k; ++d) theta[1 + d] = std::log(scales[d]) + log_unit(rng);
    theta[k + 1] = log_unit(rng);
    starts.push_back(theta.cwiseMax(bounds.lower).cwiseMin(bounds.upper));
  }

  const DistanceCache cache(inputs, kind, options.wasserstein_p);
  auto objective = [&](const Eigen::VectorXd& theta) {
    const KernelSpec spec = unpack(theta, initial);
    const auto fact = factorize(cache.gram(spec), spec.noise_variance);
    if (!fact) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = cholesky_solve(fact->lower, standardized);
    const double value = log_likelihood_from(fact->lower, standardized, alpha);
    return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
  };

  Eigen::VectorXd best_theta;
  double best_value = -std::numeric_limits<double>::infinity();

  for (const auto& start : starts) {
    Eigen::VectorXd theta = start;
    double value = objective(theta);
    int evals = 1;
    double step = options.initial_step;
    while (step >= options.min_step && evals < options.max_evals_per_start) {
      bool improved = false;
      for (Eigen::Index d = 0; d < k + 2 && evals < options.max_evals_per_start; ++d) {
        for (double sign : {1.0, -1.0}) {
          if (evals >= options.max_evals_per_start) break;
          Eigen::VectorXd trial = theta;
          trial[d] = std::clamp(trial[d] + sign * step, bounds.lower[d], bounds.upper[d]);
          if (trial[d] == theta[d]) continue;
          const double trial_value = objective(trial);
          ++evals;
          if (trial_value > value) {
            theta = std::move(trial);
            value = trial_value;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
  }

  if (!std::isfinite(best_value)) {
    throw FitError("fit_gp: no hyperparameter setting gave a factorable Gram matrix");
  }
  return GpModel(unpack(best_theta, initial),
                 std::vector<Eigen::VectorXd>(inputs.begin(), inputs.end()), standardized,
                 scaling);
}

}  // namespace bora
