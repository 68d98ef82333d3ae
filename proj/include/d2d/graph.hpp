#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "d2d/types.hpp"

namespace d2d {

struct EdgeStats {
  std::uint64_t event_count = 0;
  std::uint64_t total_bytes = 0;
  Timestamp first_ts = 0;
  Timestamp last_ts = 0;
};

// Weighted undirected user graph induced by sharing events. Nodes are stored
// as dense indices with a user-id lookup so per-group BFS stays cache-friendly.
class EncounterGraph {
 public:
  using NodeIndex = std::uint32_t;

  static EncounterGraph from_events(std::span<const SharingEvent> events);

  std::size_t num_nodes() const { return node_ids_.size(); }
  std::size_t num_edges() const { return edge_targets_.size() / 2; }

  // Node ids in ascending order; NodeIndex i corresponds to user_ids()[i].
  const std::vector<UserId>& user_ids() const { return node_ids_; }
  bool has_user(UserId u) const { return index_of_.count(u) != 0; }
  NodeIndex index_of(UserId u) const;

  // Neighbor indices in ascending order.
  std::span<const NodeIndex> neighbors(NodeIndex i) const;
  std::size_t degree(NodeIndex i) const { return neighbors(i).size(); }
  bool has_edge(NodeIndex a, NodeIndex b) const;

  const EdgeStats* edge_stats(UserId u, UserId v) const;

  // Sum over incident edges of event_count.
  std::uint64_t strength(NodeIndex i) const;

 private:
  std::vector<UserId> node_ids_;
  std::unordered_map<UserId, NodeIndex> index_of_;
  std::vector<std::uint32_t> adj_offsets_;  // size num_nodes+1
  std::vector<NodeIndex> edge_targets_;
  std::unordered_map<UserPair, EdgeStats, UserPairHash> edge_stats_;
};

struct Group {
  GroupId id = 0;  // smallest member user id
  std::vector<UserId> members;  // ascending
};

struct GroupPartition {
  std::vector<Group> groups;  // ascending by id
  std::unordered_map<UserId, GroupId> group_of;
};

// Connected components of the encounter graph via union-find with path
// compression. Group id = smallest member id.
GroupPartition compute_groups(const EncounterGraph& graph);

// Exact histogram of group sizes.
std::map<std::size_t, std::size_t> group_size_histogram(const GroupPartition& partition);

}  // namespace d2d
