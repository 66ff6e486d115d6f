#include "nettomo/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nettomo/error.hpp"

namespace nettomo {

InitialPlan resolve_xi(const XiSpec& xi, std::int64_t horizon, std::size_t probe_count) {
  if (horizon < 1) throw Error(ErrorKind::Configuration, "horizon must be positive");
  if (probe_count == 0) throw Error(ErrorKind::Configuration, "no probes");
  InitialPlan plan;
  if (xi.cube_root_schedule) {
    plan.xi = std::pow(static_cast<double>(horizon), -1.0 / 3.0);
  } else {
    if (!(xi.fraction >= 0.0 && xi.fraction < 1.0)) throw Error(ErrorKind::Configuration, "xi must lie in [0,1)");
    plan.xi = xi.fraction;
  }
  plan.total = std::llround(plan.xi * static_cast<double>(horizon));
  if (plan.total >= horizon) throw Error(ErrorKind::Configuration, "initial phase does not fit in the horizon");
  const auto M = static_cast<std::int64_t>(probe_count);
  plan.per_probe.assign(probe_count, plan.total / M);
  for (std::int64_t m = 0; m < plan.total % M; ++m) ++plan.per_probe[static_cast<std::size_t>(m)];
  return plan;
}

const char* to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::Opal: return "opal";
    case PolicyKind::OpalLazy: return "opal_lazy";
    case PolicyKind::Uniform: return "uniform";
    case PolicyKind::Oracle: return "oracle";
    case PolicyKind::Iterative: return "iterative";
  }
  return "unknown";
}

std::string default_policy_name(const PolicyConfig& config) {
  std::string name = to_string(config.kind);
  if (config.kind == PolicyKind::OpalLazy) name += "_b" + std::to_string(config.lazy_batch);
  return name;
}

std::size_t chase_max_deficit(const Eigen::VectorXd& target, std::span<const std::int64_t> counts, std::int64_t t) {
  const double inv_t = 1.0 / static_cast<double>(t);
  std::size_t best = 0;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < counts.size(); ++m) {
    const double gap = target[static_cast<Eigen::Index>(m)] - static_cast<double>(counts[m]) * inv_t;
    if (gap > best_gap || (gap == best_gap && counts[m] < counts[best])) {
      best = m;
      best_gap = gap;
    }
  }
  return best;
}

std::size_t chase_quota(const Eigen::VectorXd& target, std::span<const std::int64_t> counts, std::int64_t t) {
  const double td = static_cast<double>(t);
  std::size_t best = counts.size();
  double best_due = 0.0;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    const double phi = target[static_cast<Eigen::Index>(m)];
    if (phi <= 0.0) continue;
    const double quota = std::ceil(td * phi - 1e-9);
    if (static_cast<double>(counts[m]) >= quota) continue;
    const double due = static_cast<double>(counts[m] + 1) / phi;
    if (best == counts.size() || due < best_due || (due == best_due && counts[m] < counts[best])) {
      best = m;
      best_due = due;
    }
  }
  return best == counts.size() ? chase_max_deficit(target, counts, t) : best;
}

std::size_t chase(ChaseRule rule, const Eigen::VectorXd& target, std::span<const std::int64_t> counts,
                  std::int64_t t) {
  return rule == ChaseRule::Quota ? chase_quota(target, counts, t) : chase_max_deficit(target, counts, t);
}

std::optional<std::size_t> initial_phase_pick(std::span<const std::int64_t> counts,
                                              std::span<const std::int64_t> initial, RngStream& rng) {
  std::size_t open = 0;
  for (std::size_t m = 0; m < counts.size(); ++m) open += counts[m] < initial[m];
  if (open == 0) return std::nullopt;
  auto k = rng.uniform_index(open);
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m] < initial[m] && k-- == 0) return m;
  }
  return std::nullopt;
}

std::size_t uniform_step(std::int64_t t, std::size_t probe_count) {
  return static_cast<std::size_t>((t - 1) % static_cast<std::int64_t>(probe_count));
}

std::size_t least_sampled(std::span<const std::int64_t> counts) {
  return static_cast<std::size_t>(std::min_element(counts.begin(), counts.end()) - counts.begin());
}

bool Policy::refresh(const PolicyContext& ctx, const TallyState& tally) {
  try {
    const auto est = link_mle(tally, *ctx.probes, ctx.estimator);
    phi_hat_ = (*ctx.allocator)(est.mu_hat, phi_hat_ ? &*phi_hat_ : nullptr);
    ++refreshes_;
    return true;
  } catch (const Error&) {
    return false;
  }
}

namespace {

class OpalPolicy final : public Policy {
 public:
  OpalPolicy(const PolicyConfig& config, const PolicyContext& ctx)
      : Policy(config.kind),
        ctx_(ctx),
        chase_(config.chase),
        batch_(config.kind == PolicyKind::OpalLazy ? config.lazy_batch : 1),
        plan_(resolve_xi(config.xi, ctx.horizon, ctx.probes->size())) {
    if (batch_ < 1) throw Error(ErrorKind::Configuration, "lazy batch must be at least 1");
  }

  std::size_t select(std::int64_t t, const TallyState& tally, RngStream& rng) override {
    const auto& counts = tally.sample_counts();
    if (auto pick = initial_phase_pick(counts, plan_.per_probe, rng)) return *pick;
    const bool due = !phi_hat_ || (t - 1) % batch_ == 0;
    if (due && !refresh(ctx_, tally) && !phi_hat_) return least_sampled(counts);
    return chase(chase_, phi_hat_->values(), counts, t);
  }

 private:
  PolicyContext ctx_;
  ChaseRule chase_;
  std::int64_t batch_;
  InitialPlan plan_;
};

class UniformPolicy final : public Policy {
 public:
  explicit UniformPolicy(std::size_t probe_count) : Policy(PolicyKind::Uniform), M_(probe_count) {}
  std::size_t select(std::int64_t t, const TallyState&, RngStream&) override { return uniform_step(t, M_); }

 private:
  std::size_t M_;
};

class OraclePolicy final : public Policy {
 public:
  OraclePolicy(const PolicyConfig& config, const PolicyContext& ctx) : Policy(PolicyKind::Oracle), chase_(config.chase) {
    if (ctx.true_optimum == nullptr) throw Error(ErrorKind::Configuration, "oracle policy needs the true optimum");
    phi_hat_ = *ctx.true_optimum;
  }
  std::size_t select(std::int64_t t, const TallyState& tally, RngStream&) override {
    return chase(chase_, phi_hat_->values(), tally.sample_counts(), t);
  }

 private:
  ChaseRule chase_;
};

class IterativePolicy final : public Policy {
 public:
  IterativePolicy(const PolicyConfig& config, const PolicyContext& ctx)
      : Policy(PolicyKind::Iterative), ctx_(ctx), batch_(config.iter_batch) {
    if (batch_ < 1) throw Error(ErrorKind::Configuration, "iterative batch must be at least 1");
  }

  std::size_t select(std::int64_t t, const TallyState& tally, RngStream& rng) override {
    if ((t - 1) % batch_ == 0) {
      if (t == 1) {
        phi_hat_ = Allocation::uniform(ctx_.probes->size());
        ++refreshes_;
      } else {
        refresh(ctx_, tally);
      }
    }
    const auto& phi = phi_hat_->values();
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (Eigen::Index m = 0; m < phi.size(); ++m) {
      if (phi[m] <= 0.0) continue;
      acc += phi[m];
      last = static_cast<std::size_t>(m);
      if (u < acc) return last;
    }
    return last;
  }

 private:
  PolicyContext ctx_;
  std::int64_t batch_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyContext& ctx) {
  if (ctx.probes == nullptr) throw Error(ErrorKind::Configuration, "policy context has no probe set");
  switch (config.kind) {
    case PolicyKind::Opal:
    case PolicyKind::OpalLazy:
      if (ctx.allocator == nullptr) throw Error(ErrorKind::Configuration, "policy context has no allocator");
      return std::make_unique<OpalPolicy>(config, ctx);
    case PolicyKind::Uniform:
      return std::make_unique<UniformPolicy>(ctx.probes->size());
    case PolicyKind::Oracle:
      return std::make_unique<OraclePolicy>(config, ctx);
    case PolicyKind::Iterative:
      if (ctx.allocator == nullptr) throw Error(ErrorKind::Configuration, "policy context has no allocator");
      return std::make_unique<IterativePolicy>(config, ctx);
  }
  throw Error(ErrorKind::Internal, "unknown policy kind");
}

}  // namespace nettomo
