#include "d2d/cascade.hpp"

#include <algorithm>
#include <cmath>

#include "d2d/parallel.hpp"

namespace d2d {

namespace {

std::vector<SharingEvent> ordered_group_events(std::span<const SharingEvent> events,
                                               const std::unordered_set<UserId>& members) {
  std::vector<SharingEvent> out;
  for (const auto& ev : events) {
    if (members.count(ev.sender) && members.count(ev.receiver)) out.push_back(ev);
  }
  std::stable_sort(out.begin(), out.end(), [](const SharingEvent& a, const SharingEvent& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.sender != b.sender) return a.sender < b.sender;
    return a.receiver < b.receiver;
  });
  return out;
}

}  // namespace

PropagationOutcome replay_propagation(std::span<const SharingEvent> second_half_events,
                                      const Group& group, UserId seed,
                                      const CascadeParams& params,
                                      const RelationshipIndex& tiers) {
  if (std::find(group.members.begin(), group.members.end(), seed) == group.members.end()) {
    throw InputError("replay_propagation: seed is not a group member");
  }
  const std::unordered_set<UserId> members(group.members.begin(), group.members.end());
  const auto events = ordered_group_events(second_half_events, members);

  PropagationOutcome out;
  out.group_id = group.id;
  out.seed = seed;
  out.infected.insert(seed);

  Rng rng(params.rng_seed);
  const double p = params.transmission_prob;
  const bool always = p >= 1.0;
  const bool never = p <= 0.0;

  std::unordered_set<UserId> active;
  for (const auto& ev : events) {
    active.insert(ev.sender);
    active.insert(ev.receiver);
    double draw = 0.0;
    if (!always && !never) draw = rng.next_double();  // one draw per event
    const bool s_inf = out.infected.count(ev.sender) != 0;
    const bool r_inf = out.infected.count(ev.receiver) != 0;
    if (s_inf == r_inf) continue;
    if (never) continue;
    if (!tiers.allows(ev.sender, ev.receiver, params.permission_threshold)) continue;
    if (!always && draw >= p) continue;
    const UserId from = s_inf ? ev.sender : ev.receiver;
    const UserId to = s_inf ? ev.receiver : ev.sender;
    out.infected.insert(to);
    out.timeline.push_back(TimelineEdge{ev.ts, from, to});
  }

  out.coverage = static_cast<double>(out.infected.size()) /
                 static_cast<double>(group.members.size());
  active.insert(seed);
  std::size_t infected_active = 0;
  for (const UserId u : out.infected) {
    if (active.count(u)) ++infected_active;
  }
  out.coverage_active =
      static_cast<double>(infected_active) / static_cast<double>(active.size());
  return out;
}

SeedChoice exhaustive_seed(std::span<const SharingEvent> second_half_events,
                           const Group& group, const CascadeParams& params,
                           const RelationshipIndex& tiers) {
  if (group.members.size() > kExhaustiveGroupLimit) {
    throw InputError("exhaustive_seed: group larger than " +
                     std::to_string(kExhaustiveGroupLimit) + " members");
  }
  SeedChoice choice;
  choice.group_id = group.id;
  choice.strategy = SeedStrategy::exhaustive;
  double best = -1.0;
  for (const UserId u : group.members) {  // ascending: smallest id wins ties
    const auto outcome = replay_propagation(second_half_events, group, u, params, tiers);
    if (outcome.coverage > best) {
      best = outcome.coverage;
      choice.seed = u;
    }
  }
  return choice;
}

CoverageStudy evaluate_coverage(const std::vector<SharingEvent>& events,
                                const GroupPartition& partition, SeedStrategy strategy,
                                const CascadeParams& params, std::size_t sample_size,
                                std::size_t min_group_size, std::uint64_t sample_seed,
                                const RelationshipIndex& tiers, unsigned threads) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < partition.groups.size(); ++i) {
    if (partition.groups[i].members.size() >= min_group_size) eligible.push_back(i);
  }
  if (eligible.size() < sample_size) {
    throw InputError("evaluate_coverage: only " + std::to_string(eligible.size()) +
                     " eligible groups, need " + std::to_string(sample_size));
  }

  // Partial Fisher-Yates over the id-ordered eligible list.
  Rng sample_rng(Rng::mix(sample_seed, 0x5eed));
  for (std::size_t i = 0; i < sample_size; ++i) {
    const std::size_t j = i + sample_rng.uniform_below(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(sample_size);
  std::sort(eligible.begin(), eligible.end());

  const auto split = split_by_fraction(events, 0.5);

  // Per-group event partition, restricted to sampled groups.
  std::unordered_map<GroupId, std::size_t> slot;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    slot[partition.groups[eligible[i]].id] = i;
  }
  std::vector<std::vector<SharingEvent>> first_events(sample_size);
  std::vector<std::vector<SharingEvent>> second_events(sample_size);
  auto scatter = [&](const std::vector<SharingEvent>& evs,
                     std::vector<std::vector<SharingEvent>>& dest) {
    for (const auto& ev : evs) {
      const auto git = partition.group_of.find(ev.sender);
      if (git == partition.group_of.end()) continue;
      const auto sit = slot.find(git->second);
      if (sit != slot.end()) dest[sit->second].push_back(ev);
    }
  };
  scatter(split.first, first_events);
  scatter(split.second, second_events);

  CoverageStudy study;
  study.outcomes.resize(sample_size);
  study.group_sizes.resize(sample_size);
  const EncounterGraph graph = EncounterGraph::from_events(events);

  parallel_for(sample_size, threads, [&](std::size_t i) {
    const Group& group = partition.groups[eligible[i]];
    const auto forest = build_sharing_forest(first_events[i], group);
    SeedChoice seed;
    if (strategy == SeedStrategy::exhaustive) {
      seed = exhaustive_seed(second_events[i], group, params, tiers);
    } else {
      Rng seed_rng(Rng::mix(sample_seed, group.id ^ 0xabcdef));
      seed = select_seed(forest, strategy, graph, group, seed_rng);
    }
    CascadeParams group_params = params;
    group_params.rng_seed = Rng::mix(params.rng_seed, group.id);
    study.outcomes[i] = replay_propagation(second_events[i], group, seed.seed, group_params, tiers);
    study.group_sizes[i] = group.members.size();
  });

  std::vector<double> covs;
  covs.reserve(sample_size);
  for (const auto& o : study.outcomes) covs.push_back(o.coverage);
  study.mean = 0.0;
  for (const double c : covs) study.mean += c;
  study.mean /= static_cast<double>(covs.size());
  std::vector<double> sorted_covs(covs);
  std::sort(sorted_covs.begin(), sorted_covs.end());
  const std::size_t n = sorted_covs.size();
  study.median = n % 2 == 1 ? sorted_covs[n / 2]
                            : 0.5 * (sorted_covs[n / 2 - 1] + sorted_covs[n / 2]);
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 == n || sorted_covs[i + 1] != sorted_covs[i]) {
      study.cdf.emplace_back(sorted_covs[i], static_cast<double>(i + 1) / static_cast<double>(n));
    }
  }
  return study;
}

}  // namespace d2d
