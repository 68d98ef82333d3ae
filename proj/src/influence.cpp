#include "d2d/influence.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

namespace d2d {

namespace {

constexpr Timestamp kNeverActive = std::numeric_limits<Timestamp>::max();

}  // namespace

UserId SharingForest::root_of(UserId u) const {
  auto it = parent.find(u);
  while (it != parent.end()) {
    u = it->second;
    it = parent.find(u);
  }
  return u;
}

std::optional<std::uint32_t> SharingForest::tree_distance(UserId u, UserId v) const {
  if (u == v) return 0;
  auto du = depth.at(u);
  auto dv = depth.at(v);
  UserId a = u, b = v;
  std::uint32_t dist = 0;
  while (du > dv) {
    a = parent.at(a);
    --du;
    ++dist;
  }
  while (dv > du) {
    b = parent.at(b);
    --dv;
    ++dist;
  }
  while (a != b) {
    const auto ita = parent.find(a);
    const auto itb = parent.find(b);
    if (ita == parent.end() || itb == parent.end()) return std::nullopt;  // different trees
    a = ita->second;
    b = itb->second;
    dist += 2;
  }
  return dist;
}

std::optional<std::uint32_t> SharingForest::common_ancestor_depth(UserId u, UserId v) const {
  auto du = depth.at(u);
  auto dv = depth.at(v);
  while (du > dv) {
    u = parent.at(u);
    --du;
  }
  while (dv > du) {
    v = parent.at(v);
    --dv;
  }
  while (u != v) {
    const auto itu = parent.find(u);
    const auto itv = parent.find(v);
    if (itu == parent.end() || itv == parent.end()) return std::nullopt;
    u = itu->second;
    v = itv->second;
    --du;
  }
  return du;
}

SharingForest build_sharing_forest(std::span<const SharingEvent> first_half_events,
                                   const Group& group) {
  SharingForest forest;
  forest.group_id = group.id;
  std::unordered_set<UserId> members(group.members.begin(), group.members.end());
  std::unordered_set<UserId> appeared;
  appeared.reserve(members.size());

  std::vector<SharingEvent> ordered(first_half_events.begin(), first_half_events.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SharingEvent& a, const SharingEvent& b) {
                     if (a.ts != b.ts) return a.ts < b.ts;
                     if (a.sender != b.sender) return a.sender < b.sender;
                     return a.receiver < b.receiver;
                   });

  for (const auto& ev : ordered) {
    if (!members.count(ev.sender) || !members.count(ev.receiver)) continue;
    if (!appeared.count(ev.receiver)) {
      forest.parent[ev.receiver] = ev.sender;
    }
    for (const UserId u : {ev.sender, ev.receiver}) {
      if (!forest.first_activity.count(u)) forest.first_activity[u] = ev.ts;
      appeared.insert(u);
    }
  }

  for (const auto& [child, par] : forest.parent) forest.children[par].push_back(child);
  for (const UserId u : group.members) {
    if (!forest.parent.count(u)) forest.roots.push_back(u);
  }
  std::sort(forest.roots.begin(), forest.roots.end());

  // Subtree sizes and depths via iterative DFS from each root.
  for (const UserId root : forest.roots) {
    std::vector<std::pair<UserId, bool>> stack{{root, false}};
    forest.depth[root] = 0;
    while (!stack.empty()) {
      auto [node, processed] = stack.back();
      stack.pop_back();
      if (processed) {
        std::uint64_t size = 1;
        const auto it = forest.children.find(node);
        if (it != forest.children.end()) {
          for (const UserId c : it->second) size += forest.subtree_size.at(c);
        }
        forest.subtree_size[node] = size;
        continue;
      }
      stack.push_back({node, true});
      const auto it = forest.children.find(node);
      if (it != forest.children.end()) {
        for (const UserId c : it->second) {
          forest.depth[c] = forest.depth.at(node) + 1;
          stack.push_back({c, false});
        }
      }
    }
  }
  return forest;
}

std::string_view seed_strategy_name(SeedStrategy s) {
  switch (s) {
    case SeedStrategy::tree_root: return "tree_root";
    case SeedStrategy::max_degree: return "max_degree";
    case SeedStrategy::max_strength: return "max_strength";
    case SeedStrategy::random: return "random";
    case SeedStrategy::exhaustive: return "exhaustive";
  }
  return "tree_root";
}

std::optional<SeedStrategy> seed_strategy_from_name(std::string_view name) {
  if (name == "tree_root") return SeedStrategy::tree_root;
  if (name == "max_degree") return SeedStrategy::max_degree;
  if (name == "max_strength") return SeedStrategy::max_strength;
  if (name == "random") return SeedStrategy::random;
  if (name == "exhaustive") return SeedStrategy::exhaustive;
  return std::nullopt;
}

SeedChoice select_seed(const SharingForest& forest, SeedStrategy strategy,
                       const EncounterGraph& graph, const Group& group, Rng& rng) {
  if (group.members.empty()) throw InputError("select_seed: empty group");
  SeedChoice choice;
  choice.group_id = group.id;
  choice.strategy = strategy;

  switch (strategy) {
    case SeedStrategy::tree_root: {
      UserId best = forest.roots.empty() ? group.members.front() : forest.roots.front();
      std::uint64_t best_size = 0;
      Timestamp best_ts = kNeverActive;
      for (const UserId r : forest.roots) {
        const std::uint64_t size = forest.subtree_size.at(r);
        const auto it = forest.first_activity.find(r);
        const Timestamp ts = it == forest.first_activity.end() ? kNeverActive : it->second;
        if (size > best_size || (size == best_size && ts < best_ts) ||
            (size == best_size && ts == best_ts && r < best)) {
          best = r;
          best_size = size;
          best_ts = ts;
        }
      }
      choice.seed = best;
      break;
    }
    case SeedStrategy::max_degree:
    case SeedStrategy::max_strength: {
      UserId best = group.members.front();
      std::uint64_t best_score = 0;
      bool first = true;
      for (const UserId u : group.members) {
        std::uint64_t score = 0;
        if (graph.has_user(u)) {
          const auto idx = graph.index_of(u);
          score = strategy == SeedStrategy::max_degree
                      ? graph.degree(idx)
                      : graph.strength(idx);
        }
        if (first || score > best_score) {
          best = u;
          best_score = score;
          first = false;
        }
      }
      choice.seed = best;
      break;
    }
    case SeedStrategy::random: {
      choice.seed = group.members[rng.uniform_below(group.members.size())];
      break;
    }
    case SeedStrategy::exhaustive:
      throw InputError(
          "select_seed: exhaustive strategy requires replay; use the cascade module");
  }
  return choice;
}

}  // namespace d2d
