#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nettomo/estimators.hpp"
#include "nettomo/oed.hpp"
#include "nettomo/probes.hpp"
#include "nettomo/rng.hpp"

namespace nettomo {

enum class PolicyKind { Opal, OpalLazy, Uniform, Oracle, Iterative };

/// Quota: among probes still below ceil(t phi_m), the one whose next sample
/// is due first. MaxDeficit: argmax phi_m - S_m / t.
enum class ChaseRule { Quota, MaxDeficit };

/// Initial-phase size: a fraction of T, or the T^(-1/3) schedule.
struct XiSpec {
  bool cube_root_schedule = false;
  double fraction = 0.1;
};

struct InitialPlan {
  double xi = 0.0;
  std::int64_t total = 0;
  /// S_{m,0}: total split evenly, remainder to the lowest indices.
  std::vector<std::int64_t> per_probe;
};

/// Throws Configuration when the initial phase does not fit in T.
InitialPlan resolve_xi(const XiSpec& xi, std::int64_t horizon, std::size_t probe_count);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Opal;
  std::string name;
  XiSpec xi;
  std::int64_t lazy_batch = 1;
  std::int64_t iter_batch = 100;
  ChaseRule chase = ChaseRule::Quota;
};

const char* to_string(PolicyKind kind) noexcept;
std::string default_policy_name(const PolicyConfig& config);

// Selection rules. `t` is the 1-based round being chosen and `counts` holds
// the sample counts after t-1 rounds. All return 0-based probe indices.

std::size_t chase_quota(const Eigen::VectorXd& target, std::span<const std::int64_t> counts, std::int64_t t);
std::size_t chase_max_deficit(const Eigen::VectorXd& target, std::span<const std::int64_t> counts, std::int64_t t);
std::size_t chase(ChaseRule rule, const Eigen::VectorXd& target, std::span<const std::int64_t> counts,
                  std::int64_t t);
/// Uniform among probes below their initial quota; empty once all are met.
std::optional<std::size_t> initial_phase_pick(std::span<const std::int64_t> counts,
                                              std::span<const std::int64_t> initial, RngStream& rng);
std::size_t uniform_step(std::int64_t t, std::size_t probe_count);
/// Lowest count, ties to the lowest index.
std::size_t least_sampled(std::span<const std::int64_t> counts);

/// Everything a policy may look at besides the tally.
struct PolicyContext {
  const ProbeSet* probes = nullptr;
  const Allocator* allocator = nullptr;
  EstimatorOptions estimator;
  std::int64_t horizon = 0;
  /// True optimum; used by Oracle only.
  const Allocation* true_optimum = nullptr;
};

class Policy {
 public:
  virtual ~Policy() = default;

  /// Probe for round t given the history summarized in `tally`.
  virtual std::size_t select(std::int64_t t, const TallyState& tally, RngStream& rng) = 0;

  PolicyKind kind() const noexcept { return kind_; }
  /// Current estimate of the optimal allocation, if the policy keeps one.
  const std::optional<Allocation>& estimated_optimum() const noexcept { return phi_hat_; }
  /// Number of times the estimated optimum was recomputed.
  std::int64_t refreshes() const noexcept { return refreshes_; }

 protected:
  explicit Policy(PolicyKind kind) : kind_(kind) {}

  /// MLE on the tally, then the allocator warm-started at the previous
  /// estimate. Returns false and keeps the old estimate on failure.
  bool refresh(const PolicyContext& ctx, const TallyState& tally);

  std::optional<Allocation> phi_hat_;
  std::int64_t refreshes_ = 0;

 private:
  PolicyKind kind_;
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const PolicyContext& ctx);

}  // namespace nettomo
