#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "nettomo/probes.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

/// A point on the probability simplex over the M probes.
class Allocation {
 public:
  /// Throws InvalidArgument on negative entries or a sum off 1 by more than 1e-9.
  explicit Allocation(Eigen::VectorXd phi);
  static Allocation uniform(std::size_t probe_count);

  std::size_t size() const noexcept { return static_cast<std::size_t>(phi_.size()); }
  double operator[](std::size_t m) const { return phi_[static_cast<Eigen::Index>(m)]; }
  const Eigen::VectorXd& values() const noexcept { return phi_; }

 private:
  Eigen::VectorXd phi_;
};

/// Fisher information of a single probe at mu (L x L).
Eigen::MatrixXd probe_fim(const ProbeDescriptor& probe, const Eigen::VectorXd& mu);
std::vector<Eigen::MatrixXd> probe_fims(const ProbeSet& probes, const Eigen::VectorXd& mu);
Eigen::MatrixXd mix_fim(const std::vector<Eigen::MatrixXd>& fims, const Eigen::VectorXd& phi);

enum class CriterionKind { AOptimal, DOptimal };

struct CriterionSpec {
  CriterionKind kind = CriterionKind::AOptimal;
  /// Lower bound on every coordinate inside simplex_optimize.
  double floor = 1e-6;
};

/// tr I^-1 or 1/det I of an already mixed FIM; +infinity when singular.
double fim_criterion(const Eigen::MatrixXd& fim, CriterionKind kind);
double generic_criterion_value(const std::vector<Eigen::MatrixXd>& fims, const Eigen::VectorXd& phi,
                               CriterionKind kind);

/// Criterion F(mu; phi) for a fixed probe set and mu, with closed forms for
/// A-optimality on square unicast sets and on RI multicast stars.
class Objective {
 public:
  Objective(const ProbeSet& probes, const Eigen::VectorXd& mu, CriterionKind kind);

  /// +infinity when the mixed FIM is singular.
  double value(const Eigen::VectorXd& phi) const;
  /// Gradient of tr I^-1 (A) or -log det I (D) with respect to phi. Only
  /// meaningful where value() is finite.
  void gradient(const Eigen::VectorXd& phi, Eigen::VectorXd& grad) const;

  std::size_t probe_count() const noexcept { return M_; }

 private:
  enum class Path { SquareUnicastA, RiA, Generic };

  Eigen::MatrixXd mixed(const Eigen::VectorXd& phi) const;

  const ProbeSet* probes_;
  Eigen::VectorXd mu_;
  CriterionKind kind_;
  Path path_;
  std::size_t M_;
  Eigen::VectorXd weights_;
  std::vector<Eigen::MatrixXd> fims_;
};

double criterion_value(const Eigen::VectorXd& mu, const Eigen::VectorXd& phi, const ProbeSet& probes,
                       const CriterionSpec& spec);

/// A_m = (1 - nu_m) / nu_m * sum_l mu_l^2 kappa_{l,m}^2 for a square Q.
Eigen::VectorXd square_unicast_weights(const Eigen::VectorXd& mu, const MeasurementMatrix& matrix);

/// phi_m proportional to sqrt(A_m). Square Q only.
Allocation star_a_optimal_allocation(const Eigen::VectorXd& mu, const MeasurementMatrix& matrix);

/// Elimination algorithm for the bit-flip star. Eliminated links get zero mass.
Allocation quantum_a_optimal_allocation(const Eigen::VectorXd& mu);

struct OptimizeOptions {
  int iterations = 2000;
  /// Start point; the floored uniform point when null.
  const Eigen::VectorXd* warm_start = nullptr;
  /// Added to k in the 2/(k+2) step so a warm start is not thrown away.
  int step_offset = 0;
};

/// Frank-Wolfe over {phi : sum phi = 1, phi >= floor}. Deterministic.
Allocation simplex_optimize(const Eigen::VectorXd& mu, const ProbeSet& probes, const CriterionSpec& spec,
                            const OptimizeOptions& opts = {});

/// Chooses the cheapest exact method for the probe set and criterion.
class Allocator {
 public:
  Allocator(const ProbeSet& probes, CriterionSpec spec, int warm_iterations = 100, int cold_iterations = 10000);

  Allocation operator()(const Eigen::VectorXd& mu, const Allocation* warm = nullptr) const;
  bool closed_form() const noexcept { return closed_form_; }
  const CriterionSpec& spec() const noexcept { return spec_; }

 private:
  const ProbeSet* probes_;
  CriterionSpec spec_;
  int warm_iterations_;
  int cold_iterations_;
  bool closed_form_;
};

}  // namespace nettomo
