#include "nettomo/probes.hpp"

#include <string>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

Eigen::VectorXd validated(Eigen::VectorXd mu) {
  if (mu.size() == 0) throw Error(ErrorKind::InvalidArgument, "link parameters are empty");
  for (Eigen::Index l = 0; l < mu.size(); ++l) {
    if (!(mu[l] > 0.0 && mu[l] < 1.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "link parameter " + std::to_string(l + 1) + " must lie in (0,1)");
    }
  }
  return mu;
}

}  // namespace

LinkParams::LinkParams(std::vector<double> mu)
    : mu_(validated(Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size())))) {}

LinkParams::LinkParams(const Eigen::VectorXd& mu) : mu_(validated(mu)) {}

double unicast_success_prob(const ProbeDescriptor& probe, const LinkParams& mu) {
  double nu = 1.0;
  for (auto l : probe.path_links) nu *= mu[l];
  return nu;
}

bool sample_unicast(const ProbeDescriptor& probe, const LinkParams& mu, RngStream& rng) {
  return rng.bernoulli(unicast_success_prob(probe, mu));
}

std::vector<std::uint8_t> sample_ri_multicast(const ProbeDescriptor& probe, const LinkParams& mu,
                                              RngStream& rng) {
  std::vector<std::uint8_t> bits;
  bits.reserve(mu.size() - 1);
  for (std::size_t l = 0; l < mu.size(); ++l) {
    if (l == probe.root_link) continue;
    bits.push_back(rng.bernoulli(mu[l]) ? 1 : 0);
  }
  return bits;
}

void perform_probe(const ProbeSet& probes, std::size_t m, const LinkParams& mu, RngStream& rng,
                   std::vector<std::uint8_t>& out) {
  const auto& probe = probes.probes.at(m);
  if (probe.mode == ProbeMode::Unicast) {
    out.assign(1, sample_unicast(probe, mu, rng) ? 1 : 0);
    return;
  }
  out.clear();
  for (std::size_t l = 0; l < mu.size(); ++l) {
    if (l == probe.root_link) continue;
    out.push_back(rng.bernoulli(mu[l]) ? 1 : 0);
  }
}

TallyState::TallyState(ProbeMode mode, std::size_t probe_count, std::size_t link_count)
    : mode_(mode), L_(link_count), S_(probe_count, 0), B_(probe_count, 0) {
  if (probe_count == 0 || link_count == 0) throw Error(ErrorKind::InvalidArgument, "empty tally");
  if (mode_ == ProbeMode::RIMulticast) {
    if (probe_count != link_count) throw Error(ErrorKind::InvalidArgument, "RI tally needs one probe per link");
    A_.assign(probe_count * link_count, 0);
  }
}

void TallyState::record(std::size_t m, std::span<const std::uint8_t> outcome) {
  if (m >= S_.size()) throw Error(ErrorKind::InvalidArgument, "probe index out of range");
  if (mode_ == ProbeMode::Unicast) {
    if (outcome.size() != 1) throw Error(ErrorKind::InvalidArgument, "unicast outcome must be a single bit");
    ++S_[m];
    if (outcome[0]) ++B_[m];
  } else {
    if (outcome.size() + 1 != L_) {
      throw Error(ErrorKind::InvalidArgument, "RI outcome must have one bit per non-root link");
    }
    ++S_[m];
    std::size_t i = 0;
    for (std::size_t l = 0; l < L_; ++l) {
      if (l == m) continue;
      if (outcome[i++]) ++A_[m * L_ + l];
    }
  }
  ++rounds_;
}

}  // namespace nettomo
