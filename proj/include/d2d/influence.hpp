#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "d2d/graph.hpp"
#include "d2d/rng.hpp"
#include "d2d/types.hpp"

namespace d2d {

// Directed per-group forest of first-infection edges: scanning the group's
// first-half events in time order (ties by sender then receiver), a user's
// parent is the sender of the event in which the user first appears at all,
// as a receiver. Users who appear first as senders, and users with no
// events, are roots.
struct SharingForest {
  GroupId group_id = 0;
  std::unordered_map<UserId, UserId> parent;               // child -> parent
  std::unordered_map<UserId, std::vector<UserId>> children;  // assignment order
  std::vector<UserId> roots;                               // ascending
  std::unordered_map<UserId, std::uint64_t> subtree_size;
  std::unordered_map<UserId, Timestamp> first_activity;    // absent: no events
  std::unordered_map<UserId, std::uint32_t> depth;         // root depth 0

  UserId root_of(UserId u) const;
  // Hop distance treating parent links as undirected tree edges; nullopt when
  // the two users are in different trees.
  std::optional<std::uint32_t> tree_distance(UserId u, UserId v) const;
  // Depth of the lowest common ancestor; nullopt for different trees.
  std::optional<std::uint32_t> common_ancestor_depth(UserId u, UserId v) const;
};

SharingForest build_sharing_forest(std::span<const SharingEvent> first_half_events,
                                   const Group& group);

enum class SeedStrategy { tree_root, max_degree, max_strength, random, exhaustive };

std::string_view seed_strategy_name(SeedStrategy s);
std::optional<SeedStrategy> seed_strategy_from_name(std::string_view name);

struct SeedChoice {
  GroupId group_id = 0;
  UserId seed = 0;
  SeedStrategy strategy = SeedStrategy::tree_root;
};

// Structural strategies. tree_root: root of the largest tree, ties broken by
// earliest first activity then smallest id. max_degree / max_strength: over
// the group subgraph, ties by smallest id. random: uniform over members.
// The exhaustive strategy needs replay and lives in the cascade module;
// requesting it here is an error.
SeedChoice select_seed(const SharingForest& forest, SeedStrategy strategy,
                       const EncounterGraph& graph, const Group& group, Rng& rng);

inline constexpr std::size_t kExhaustiveGroupLimit = 20;

}  // namespace d2d
