#include "nettomo/oed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double path_product(const ProbeDescriptor& probe, const Eigen::VectorXd& mu) {
  double nu = 1.0;
  for (auto l : probe.path_links) nu *= mu[static_cast<Eigen::Index>(l)];
  return nu;
}

}  // namespace

Allocation::Allocation(Eigen::VectorXd phi) : phi_(std::move(phi)) {
  if (phi_.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty allocation");
  for (Eigen::Index m = 0; m < phi_.size(); ++m) {
    if (!(phi_[m] >= 0.0) || !std::isfinite(phi_[m])) {
      throw Error(ErrorKind::InvalidArgument, "allocation entries must be nonnegative");
    }
  }
  if (std::abs(phi_.sum() - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "allocation must sum to 1");
}

Allocation Allocation::uniform(std::size_t probe_count) {
  const auto M = static_cast<Eigen::Index>(probe_count);
  return Allocation(Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M)));
}

Eigen::MatrixXd probe_fim(const ProbeDescriptor& probe, const Eigen::VectorXd& mu) {
  const auto L = mu.size();
  Eigen::MatrixXd fim = Eigen::MatrixXd::Zero(L, L);
  if (probe.mode == ProbeMode::Unicast) {
    const double nu = path_product(probe, mu);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(L);
    for (auto l : probe.path_links) d[static_cast<Eigen::Index>(l)] = 1.0 / mu[static_cast<Eigen::Index>(l)];
    fim = (nu / (1.0 - nu)) * d * d.transpose();
  } else {
    for (Eigen::Index l = 0; l < L; ++l) {
      if (static_cast<std::size_t>(l) == probe.root_link) continue;
      fim(l, l) = 1.0 / (mu[l] * (1.0 - mu[l]));
    }
  }
  return fim;
}

std::vector<Eigen::MatrixXd> probe_fims(const ProbeSet& probes, const Eigen::VectorXd& mu) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(probes.size());
  for (const auto& p : probes.probes) out.push_back(probe_fim(p, mu));
  return out;
}

Eigen::MatrixXd mix_fim(const std::vector<Eigen::MatrixXd>& fims, const Eigen::VectorXd& phi) {
  if (fims.empty() || static_cast<Eigen::Index>(fims.size()) != phi.size()) {
    throw Error(ErrorKind::InvalidArgument, "allocation length does not match the probe count");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(fims[0].rows(), fims[0].cols());
  for (std::size_t m = 0; m < fims.size(); ++m) out += phi[static_cast<Eigen::Index>(m)] * fims[m];
  return out;
}

double fim_criterion(const Eigen::MatrixXd& fim, CriterionKind kind) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fim, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0) || ev.minCoeff() <= 1e-12 * top) return kInf;
  if (kind == CriterionKind::AOptimal) return ev.cwiseInverse().sum();
  return std::exp(-ev.array().log().sum());
}

double generic_criterion_value(const std::vector<Eigen::MatrixXd>& fims, const Eigen::VectorXd& phi,
                               CriterionKind kind) {
  return fim_criterion(mix_fim(fims, phi), kind);
}

Objective::Objective(const ProbeSet& probes, const Eigen::VectorXd& mu, CriterionKind kind)
    : probes_(&probes), mu_(mu), kind_(kind), path_(Path::Generic), M_(probes.size()) {
  if (mu.size() != probes.matrix.cols()) throw Error(ErrorKind::InvalidArgument, "mu length does not match the link count");
  if (kind == CriterionKind::AOptimal && probes.mode == ProbeMode::Unicast && probes.matrix.is_square()) {
    path_ = Path::SquareUnicastA;
    weights_ = square_unicast_weights(mu, probes.matrix);
  } else if (kind == CriterionKind::AOptimal && probes.mode == ProbeMode::RIMulticast) {
    path_ = Path::RiA;
    weights_ = (mu.array() * (1.0 - mu.array())).matrix();
  } else {
    fims_ = probe_fims(probes, mu);
    weights_.resize(static_cast<Eigen::Index>(M_));
    for (std::size_t m = 0; m < M_; ++m) {
      const auto& p = probes.probes[m];
      if (p.mode == ProbeMode::Unicast) {
        const double nu = path_product(p, mu);
        weights_[static_cast<Eigen::Index>(m)] = nu / (1.0 - nu);
      }
    }
  }
}

Eigen::MatrixXd Objective::mixed(const Eigen::VectorXd& phi) const { return mix_fim(fims_, phi); }

double Objective::value(const Eigen::VectorXd& phi) const {
  if (phi.size() != static_cast<Eigen::Index>(M_)) throw Error(ErrorKind::InvalidArgument, "allocation length does not match the probe count");
  switch (path_) {
    case Path::SquareUnicastA: {
      double f = 0.0;
      for (Eigen::Index m = 0; m < phi.size(); ++m) {
        if (phi[m] <= 0.0) return kInf;
        f += weights_[m] / phi[m];
      }
      return f;
    }
    case Path::RiA: {
      double f = 0.0;
      for (Eigen::Index l = 0; l < phi.size(); ++l) {
        const double rest = 1.0 - phi[l];
        if (rest <= 0.0) return kInf;
        f += weights_[l] / rest;
      }
      return f;
    }
    case Path::Generic:
      break;
  }
  return fim_criterion(mixed(phi), kind_);
}

void Objective::gradient(const Eigen::VectorXd& phi, Eigen::VectorXd& grad) const {
  const auto M = static_cast<Eigen::Index>(M_);
  grad.resize(M);
  switch (path_) {
    case Path::SquareUnicastA:
      for (Eigen::Index m = 0; m < M; ++m) grad[m] = -weights_[m] / (phi[m] * phi[m]);
      return;
    case Path::RiA:
      // Differs from -tr(I^-1 I_m I^-1) by a constant, which the simplex ignores.
      for (Eigen::Index l = 0; l < M; ++l) {
        const double rest = 1.0 - phi[l];
        grad[l] = weights_[l] / (rest * rest);
      }
      return;
    case Path::Generic:
      break;
  }
  const Eigen::MatrixXd fim = mixed(phi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fim);
  const auto& ev = eig.eigenvalues();
  const auto& V = eig.eigenvectors();
  Eigen::VectorXd power = ev.cwiseInverse();
  if (kind_ == CriterionKind::AOptimal) power = power.cwiseAbs2();
  const Eigen::MatrixXd P = V * power.asDiagonal() * V.transpose();
  for (Eigen::Index m = 0; m < M; ++m) {
    const auto& probe = probes_->probes[static_cast<std::size_t>(m)];
    double g = 0.0;
    if (probe.mode == ProbeMode::Unicast) {
      for (auto i : probe.path_links) {
        for (auto j : probe.path_links) {
          const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
          g += P(a, b) / (mu_[a] * mu_[b]);
        }
      }
      g *= weights_[m];
    } else {
      for (Eigen::Index l = 0; l < mu_.size(); ++l) {
        if (static_cast<std::size_t>(l) == probe.root_link) continue;
        g += P(l, l) / (mu_[l] * (1.0 - mu_[l]));
      }
    }
    grad[m] = -g;
  }
}

double criterion_value(const Eigen::VectorXd& mu, const Eigen::VectorXd& phi, const ProbeSet& probes,
                       const CriterionSpec& spec) {
  return Objective(probes, mu, spec.kind).value(phi);
}

Eigen::VectorXd square_unicast_weights(const Eigen::VectorXd& mu, const MeasurementMatrix& matrix) {
  if (!matrix.is_square()) throw Error(ErrorKind::InvalidArgument, "closed form needs a square measurement matrix");
  const auto& Q = matrix.entries();
  const auto& kappa = matrix.kappa();
  const Eigen::VectorXd log_nu = Q * mu.array().log().matrix();
  const Eigen::ArrayXd mu2 = mu.array().square();
  Eigen::VectorXd A(Q.rows());
  for (Eigen::Index m = 0; m < Q.rows(); ++m) {
    const double nu = std::exp(log_nu[m]);
    A[m] = (1.0 - nu) / nu * (mu2 * kappa.col(m).array().square()).sum();
  }
  return A;
}

Allocation star_a_optimal_allocation(const Eigen::VectorXd& mu, const MeasurementMatrix& matrix) {
  const Eigen::VectorXd A = square_unicast_weights(mu, matrix);
  if ((A.array() <= 0.0).any()) throw Error(ErrorKind::Internal, "nonpositive allocation weight");
  Eigen::VectorXd phi = A.cwiseSqrt();
  phi /= phi.sum();
  return Allocation(std::move(phi));
}

Allocation quantum_a_optimal_allocation(const Eigen::VectorXd& mu) {
  const auto L = mu.size();
  if (L < 2) throw Error(ErrorKind::InvalidArgument, "need at least two links");
  const Eigen::VectorXd s = (mu.array() * (1.0 - mu.array())).sqrt().matrix();
  std::vector<Eigen::Index> opt(static_cast<std::size_t>(L));
  std::iota(opt.begin(), opt.end(), Eigen::Index{0});
  auto total = [&] {
    double sum = 0.0;
    for (auto l : opt) sum += s[l];
    return sum;
  };
  while (opt.size() > 2) {
    auto top = opt.begin();
    for (auto it = opt.begin(); it != opt.end(); ++it) {
      if (s[*it] > s[*top]) top = it;
    }
    if (total() - static_cast<double>(opt.size() - 1) * s[*top] >= 0.0) break;
    opt.erase(top);
  }
  const double sum = total();
  const double k = static_cast<double>(opt.size() - 1);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(L);
  for (auto l : opt) phi[l] = (sum - k * s[l]) / sum;
  return Allocation(std::move(phi));
}

Allocation simplex_optimize(const Eigen::VectorXd& mu, const ProbeSet& probes, const CriterionSpec& spec,
                            const OptimizeOptions& opts) {
  const auto M = static_cast<Eigen::Index>(probes.size());
  const double floor = spec.floor;
  if (!(floor >= 0.0) || floor * static_cast<double>(M) >= 1.0) {
    throw Error(ErrorKind::Configuration, "allocation floor must lie in [0, 1/M)");
  }
  const Objective objective(probes, mu, spec.kind);
  const double span = 1.0 - floor * static_cast<double>(M);

  Eigen::VectorXd phi = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
  int offset = 0;
  if (opts.warm_start != nullptr && opts.warm_start->size() == M) {
    Eigen::VectorXd start = (span * *opts.warm_start).array() + floor;
    start /= start.sum();
    if (std::isfinite(objective.value(start))) {
      phi = std::move(start);
      offset = opts.step_offset;
    }
  }
  if (!std::isfinite(objective.value(phi))) {
    throw Error(ErrorKind::Configuration, "criterion is not finite at the starting allocation");
  }

  Eigen::VectorXd grad(M);
  for (int k = 0; k < opts.iterations; ++k) {
    objective.gradient(phi, grad);
    Eigen::Index best = 0;
    grad.minCoeff(&best);
    const double gamma = 2.0 / static_cast<double>(k + offset + 2);
    phi *= 1.0 - gamma;
    phi.array() += gamma * floor;
    phi[best] += gamma * span;
  }
  phi = phi.cwiseMax(0.0);
  phi /= phi.sum();
  return Allocation(std::move(phi));
}

Allocator::Allocator(const ProbeSet& probes, CriterionSpec spec, int warm_iterations, int cold_iterations)
    : probes_(&probes),
      spec_(spec),
      warm_iterations_(warm_iterations),
      cold_iterations_(cold_iterations),
      closed_form_(spec.kind == CriterionKind::AOptimal &&
                   (probes.mode == ProbeMode::RIMulticast || probes.matrix.is_square())) {}

Allocation Allocator::operator()(const Eigen::VectorXd& mu, const Allocation* warm) const {
  if (closed_form_) {
    if (probes_->mode == ProbeMode::RIMulticast) return quantum_a_optimal_allocation(mu);
    return star_a_optimal_allocation(mu, probes_->matrix);
  }
  OptimizeOptions opts;
  if (warm != nullptr) {
    opts.iterations = warm_iterations_;
    opts.warm_start = &warm->values();
    opts.step_offset = warm_iterations_;
  } else {
    opts.iterations = cold_iterations_;
  }
  return simplex_optimize(mu, *probes_, spec_, opts);
}

}  // namespace nettomo
