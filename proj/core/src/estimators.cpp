#include "nettomo/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

double clip_to(double v, double clip) {
  if (clip <= 0.0) return v;
  return std::clamp(v, clip, 1.0 - clip);
}

double smoothed_rate(std::int64_t hits, std::int64_t n, bool smoothing) {
  return smoothing ? (static_cast<double>(hits) + 0.5) / (static_cast<double>(n) + 1.0)
                   : static_cast<double>(hits) / static_cast<double>(n);
}

Eigen::VectorXd probe_rates(const TallyState& tally, const EstimatorOptions& opts) {
  Eigen::VectorXd nu(static_cast<Eigen::Index>(tally.probe_count()));
  for (std::size_t m = 0; m < tally.probe_count(); ++m) {
    nu[static_cast<Eigen::Index>(m)] = probe_rate_mle(tally, m, opts);
  }
  return nu;
}

}  // namespace

double probe_rate_mle(const TallyState& tally, std::size_t m, const EstimatorOptions& opts) {
  const auto s = tally.samples(m);
  if (s == 0) throw Error(ErrorKind::InsufficientData, "probe " + std::to_string(m + 1) + " has no samples");
  return clip_to(smoothed_rate(tally.successes(m), s, opts.smoothing), opts.clip);
}

Eigen::VectorXd links_from_probe_rates(const Eigen::VectorXd& nu_hat, const MeasurementMatrix& matrix,
                                       double clip) {
  if (nu_hat.size() != matrix.rows()) throw Error(ErrorKind::InvalidArgument, "probe rate vector has wrong length");
  Eigen::VectorXd mu = (matrix.kappa() * nu_hat.array().log().matrix()).array().exp().matrix();
  for (Eigen::Index l = 0; l < mu.size(); ++l) mu[l] = clip_to(mu[l], clip);
  return mu;
}

Estimate star_link_mle(const TallyState& tally, const MeasurementMatrix& matrix, const EstimatorOptions& opts) {
  if (!matrix.is_square()) throw Error(ErrorKind::Identifiability, "star MLE needs a square measurement matrix");
  return Estimate{links_from_probe_rates(probe_rates(tally, opts), matrix, opts.clip), {}, 0.0};
}

Estimate general_link_mle(const TallyState& tally, const MeasurementMatrix& matrix, const EstimatorOptions& opts) {
  return Estimate{links_from_probe_rates(probe_rates(tally, opts), matrix, opts.clip), {}, 0.0};
}

Estimate ri_link_mle(const TallyState& tally, const EstimatorOptions& opts) {
  if (tally.mode() != ProbeMode::RIMulticast) throw Error(ErrorKind::InvalidArgument, "RI MLE needs an RI tally");
  const auto L = tally.link_count();
  Eigen::VectorXd mu(static_cast<Eigen::Index>(L));
  for (std::size_t l = 0; l < L; ++l) {
    std::int64_t n = 0, hits = 0;
    for (std::size_t m = 0; m < tally.probe_count(); ++m) {
      if (m == l) continue;
      n += tally.samples(m);
      hits += tally.no_flips(m, l);
    }
    if (n == 0) throw Error(ErrorKind::InsufficientData, "link " + std::to_string(l + 1) + " was never observed");
    mu[static_cast<Eigen::Index>(l)] = clip_to(smoothed_rate(hits, n, opts.smoothing), opts.clip);
  }
  return Estimate{std::move(mu), {}, 0.0};
}

Estimate link_mle(const TallyState& tally, const ProbeSet& probes, const EstimatorOptions& opts) {
  if (probes.mode == ProbeMode::RIMulticast) return ri_link_mle(tally, opts);
  if (probes.matrix.is_square()) return star_link_mle(tally, probes.matrix, opts);
  return general_link_mle(tally, probes.matrix, opts);
}

Eigen::VectorXd confidence_radii(const TallyState& tally, const MeasurementMatrix& matrix, double delta,
                                 ProbeMode mode) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto L = static_cast<Eigen::Index>(tally.link_count());
  const auto M = tally.probe_count();
  Eigen::VectorXd radii = Eigen::VectorXd::Zero(L);

  if (mode == ProbeMode::RIMulticast) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0,1)");
    const double log_term = std::log(1.0 / delta);
    for (Eigen::Index l = 0; l < L; ++l) {
      std::int64_t n = 0;
      for (std::size_t m = 0; m < M; ++m) {
        if (static_cast<Eigen::Index>(m) != l) n += tally.samples(m);
      }
      radii[l] = n == 0 ? kInf : std::sqrt(log_term / static_cast<double>(n));
    }
    return radii;
  }

  if (!(delta > 0.0 && delta * static_cast<double>(M) < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1/M)");
  }
  const double log_term = std::log(1.0 / (delta * static_cast<double>(M)));
  const auto& kappa = matrix.kappa();
  for (Eigen::Index l = 0; l < L; ++l) {
    double r = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double k = std::abs(kappa(l, static_cast<Eigen::Index>(m)));
      if (k < 1e-12) continue;
      const auto s = tally.samples(m);
      if (s == 0) {
        r = kInf;
        break;
      }
      r += k * std::sqrt(log_term / static_cast<double>(s));
    }
    radii[l] = r;
  }
  return radii;
}

Estimate estimate_links(const TallyState& tally, const ProbeSet& probes, double delta, const EstimatorOptions& opts) {
  auto est = link_mle(tally, probes, opts);
  est.radii = confidence_radii(tally, probes.matrix, delta, probes.mode);
  est.delta = delta;
  return est;
}

double default_delta(std::size_t link_count, std::int64_t horizon) {
  const double t = static_cast<double>(horizon);
  return 1.0 / (static_cast<double>(link_count) * t * t);
}

}  // namespace nettomo
