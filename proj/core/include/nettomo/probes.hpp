#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nettomo/rng.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

/// Hidden per-link success (classical) or no-flip (quantum) probabilities.
class LinkParams {
 public:
  /// Throws InvalidArgument unless every entry lies in (0,1).
  explicit LinkParams(std::vector<double> mu);
  explicit LinkParams(const Eigen::VectorXd& mu);

  std::size_t size() const noexcept { return static_cast<std::size_t>(mu_.size()); }
  double operator[](std::size_t l) const { return mu_[static_cast<Eigen::Index>(l)]; }
  const Eigen::VectorXd& values() const noexcept { return mu_; }

 private:
  Eigen::VectorXd mu_;
};

/// nu_m: product of mu over the probe's path.
double unicast_success_prob(const ProbeDescriptor& probe, const LinkParams& mu);

bool sample_unicast(const ProbeDescriptor& probe, const LinkParams& mu, RngStream& rng);

/// One bit per non-root link in ascending link order; 1 means no flip.
std::vector<std::uint8_t> sample_ri_multicast(const ProbeDescriptor& probe, const LinkParams& mu,
                                              RngStream& rng);

/// Writes the outcome of probe m into `out` (resized as needed). Unicast
/// outcomes are a single bit.
void perform_probe(const ProbeSet& probes, std::size_t m, const LinkParams& mu, RngStream& rng,
                   std::vector<std::uint8_t>& out);

/// Sufficient statistics of the probe history.
class TallyState {
 public:
  TallyState(ProbeMode mode, std::size_t probe_count, std::size_t link_count);

  /// Unicast outcomes have one bit; RI outcomes of probe m have L-1 bits in
  /// ascending link order skipping link m. Throws InvalidArgument otherwise.
  void record(std::size_t m, std::span<const std::uint8_t> outcome);

  ProbeMode mode() const noexcept { return mode_; }
  std::size_t probe_count() const noexcept { return S_.size(); }
  std::size_t link_count() const noexcept { return L_; }
  std::int64_t rounds() const noexcept { return rounds_; }

  std::int64_t samples(std::size_t m) const { return S_.at(m); }
  std::int64_t successes(std::size_t m) const { return B_.at(m); }
  std::int64_t no_flips(std::size_t m, std::size_t l) const { return A_.at(m * L_ + l); }
  const std::vector<std::int64_t>& sample_counts() const noexcept { return S_; }

 private:
  ProbeMode mode_;
  std::size_t L_;
  std::vector<std::int64_t> S_;
  std::vector<std::int64_t> B_;
  std::vector<std::int64_t> A_;
  std::int64_t rounds_ = 0;
};

}  // namespace nettomo
