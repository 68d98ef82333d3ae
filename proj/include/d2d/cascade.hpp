#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "d2d/graph.hpp"
#include "d2d/influence.hpp"
#include "d2d/rng.hpp"
#include "d2d/trace.hpp"
#include "d2d/types.hpp"

namespace d2d {

struct CascadeParams {
  double transmission_prob = 1.0;
  Tier permission_threshold = Tier::stranger;
  std::uint64_t rng_seed = 0;
};

struct TimelineEdge {
  Timestamp ts;
  UserId from;
  UserId to;
};

struct PropagationOutcome {
  GroupId group_id = 0;
  UserId seed = 0;
  std::unordered_set<UserId> infected;
  double coverage = 0.0;         // |infected| / |group|
  double coverage_active = 0.0;  // over members with second-half activity (plus seed)
  std::vector<TimelineEdge> timeline;
};

// Replays the group's second-half encounters from the seed. Events are
// processed in (ts, sender, receiver) order; when exactly one endpoint holds
// the content the other acquires it iff the pair's tier passes the threshold
// and a Bernoulli(transmission_prob) draw succeeds. For 0 < p < 1 one draw is
// consumed per in-group event regardless of state, so runs with a shared seed
// are coupled: raising p can only grow the infected set. p >= 1 consumes no
// draws; p <= 0 never transmits. Infection is permanent.
PropagationOutcome replay_propagation(std::span<const SharingEvent> second_half_events,
                                      const Group& group, UserId seed,
                                      const CascadeParams& params,
                                      const RelationshipIndex& tiers);

// Argmax of replay coverage over every member as seed, smallest id on ties.
// Only sensible for small groups; refuses groups above kExhaustiveGroupLimit.
SeedChoice exhaustive_seed(std::span<const SharingEvent> second_half_events,
                           const Group& group, const CascadeParams& params,
                           const RelationshipIndex& tiers);

struct CoverageStudy {
  std::vector<PropagationOutcome> outcomes;  // ordered by group id
  std::vector<std::size_t> group_sizes;      // aligned with outcomes
  double mean = 0.0;
  double median = 0.0;
  std::vector<std::pair<double, double>> cdf;  // (coverage, F(coverage))
};

// Samples sample_size groups of size >= min_group_size uniformly without
// replacement (deterministic given sample_seed), splits the trace at 0.5,
// builds each group's first-half forest, seeds per strategy, and replays the
// second half. Per-group replays run in parallel; aggregation is ordered by
// group id so results are independent of the worker count.
CoverageStudy evaluate_coverage(const std::vector<SharingEvent>& events,
                                const GroupPartition& partition, SeedStrategy strategy,
                                const CascadeParams& params, std::size_t sample_size,
                                std::size_t min_group_size, std::uint64_t sample_seed,
                                const RelationshipIndex& tiers, unsigned threads = 1);

}  // namespace d2d
