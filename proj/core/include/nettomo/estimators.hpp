#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "nettomo/probes.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

struct EstimatorOptions {
  /// Use (successes + 1/2) / (samples + 1) instead of the raw frequency.
  bool smoothing = true;
  /// Estimates are clipped to [clip, 1 - clip]; 0 disables clipping.
  double clip = 1e-6;
};

struct Estimate {
  Eigen::VectorXd mu_hat;
  /// Empty unless filled by estimate_links().
  Eigen::VectorXd radii;
  double delta = 0.0;
};

/// Success frequency of probe m. Throws InsufficientData when S_m = 0.
double probe_rate_mle(const TallyState& tally, std::size_t m, const EstimatorOptions& opts = {});

/// exp(kappa * log nu): the exact inverse for square Q, least squares in the
/// log domain otherwise.
Eigen::VectorXd links_from_probe_rates(const Eigen::VectorXd& nu_hat, const MeasurementMatrix& matrix,
                                       double clip = 0.0);

/// Square, invertible Q only.
Estimate star_link_mle(const TallyState& tally, const MeasurementMatrix& matrix,
                       const EstimatorOptions& opts = {});
Estimate general_link_mle(const TallyState& tally, const MeasurementMatrix& matrix,
                          const EstimatorOptions& opts = {});
/// Pooled no-flip frequency of each link over the probes that observe it.
Estimate ri_link_mle(const TallyState& tally, const EstimatorOptions& opts = {});

/// Dispatches on the probe mode.
Estimate link_mle(const TallyState& tally, const ProbeSet& probes, const EstimatorOptions& opts = {});

/// Per-link confidence radius with unit constants and exponent 1/2.
/// Unicast: sum over probes with kappa != 0 of |kappa| sqrt(log(1/(delta M)) / S_m),
/// requiring delta < 1/M. RI multicast: sqrt(log(1/delta) / sum_{m != l} S_m).
/// Links that depend on an unsampled probe get +infinity.
Eigen::VectorXd confidence_radii(const TallyState& tally, const MeasurementMatrix& matrix, double delta,
                                 ProbeMode mode);

/// MLE plus radii in one call.
Estimate estimate_links(const TallyState& tally, const ProbeSet& probes, double delta,
                        const EstimatorOptions& opts = {});

/// 1 / (L T^2).
double default_delta(std::size_t link_count, std::int64_t horizon);

}  // namespace nettomo
