#include "d2d/graph.hpp"

#include <algorithm>
#include <numeric>

namespace d2d {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

EncounterGraph EncounterGraph::from_events(std::span<const SharingEvent> events) {
  EncounterGraph g;
  g.edge_stats_.reserve(events.size());
  for (const auto& ev : events) {
    const UserPair pair(ev.sender, ev.receiver);
    auto [it, inserted] = g.edge_stats_.try_emplace(
        pair, EdgeStats{1, ev.size_bytes, ev.ts, ev.ts});
    if (!inserted) {
      auto& st = it->second;
      ++st.event_count;
      st.total_bytes += ev.size_bytes;
      st.first_ts = std::min(st.first_ts, ev.ts);
      st.last_ts = std::max(st.last_ts, ev.ts);
    }
  }

  g.node_ids_.reserve(g.edge_stats_.size() * 2);
  for (const auto& [pair, st] : g.edge_stats_) {
    g.node_ids_.push_back(pair.a);
    g.node_ids_.push_back(pair.b);
  }
  std::sort(g.node_ids_.begin(), g.node_ids_.end());
  g.node_ids_.erase(std::unique(g.node_ids_.begin(), g.node_ids_.end()),
                    g.node_ids_.end());
  g.index_of_.reserve(g.node_ids_.size());
  for (NodeIndex i = 0; i < g.node_ids_.size(); ++i) g.index_of_[g.node_ids_[i]] = i;

  const std::size_t n = g.node_ids_.size();
  std::vector<std::uint32_t> deg(n, 0);
  for (const auto& [pair, st] : g.edge_stats_) {
    ++deg[g.index_of_[pair.a]];
    ++deg[g.index_of_[pair.b]];
  }
  g.adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.adj_offsets_[i + 1] = g.adj_offsets_[i] + deg[i];
  g.edge_targets_.resize(g.adj_offsets_[n]);
  std::vector<std::uint32_t> cursor(g.adj_offsets_.begin(), g.adj_offsets_.end() - 1);
  for (const auto& [pair, st] : g.edge_stats_) {
    const NodeIndex ia = g.index_of_[pair.a];
    const NodeIndex ib = g.index_of_[pair.b];
    g.edge_targets_[cursor[ia]++] = ib;
    g.edge_targets_[cursor[ib]++] = ia;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.edge_targets_.begin() + g.adj_offsets_[i],
              g.edge_targets_.begin() + g.adj_offsets_[i + 1]);
  }
  return g;
}

EncounterGraph::NodeIndex EncounterGraph::index_of(UserId u) const {
  const auto it = index_of_.find(u);
  if (it == index_of_.end()) throw InputError("unknown user id " + std::to_string(u));
  return it->second;
}

std::span<const EncounterGraph::NodeIndex> EncounterGraph::neighbors(NodeIndex i) const {
  return {edge_targets_.data() + adj_offsets_[i],
          edge_targets_.data() + adj_offsets_[i + 1]};
}

bool EncounterGraph::has_edge(NodeIndex a, NodeIndex b) const {
  const auto nbrs = neighbors(a);
  return std::binary_search(nbrs.begin(), nbrs.end(), b);
}

const EdgeStats* EncounterGraph::edge_stats(UserId u, UserId v) const {
  const auto it = edge_stats_.find(UserPair(u, v));
  return it == edge_stats_.end() ? nullptr : &it->second;
}

std::uint64_t EncounterGraph::strength(NodeIndex i) const {
  std::uint64_t total = 0;
  const UserId u = node_ids_[i];
  for (const NodeIndex j : neighbors(i)) {
    total += edge_stats_.at(UserPair(u, node_ids_[j])).event_count;
  }
  return total;
}

GroupPartition compute_groups(const EncounterGraph& graph) {
  const std::size_t n = graph.num_nodes();
  UnionFind uf(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (const auto j : graph.neighbors(i)) {
      if (j > i) uf.unite(i, j);
    }
  }

  // Node ids ascend with index, so find(i) is the index of the smallest
  // member and the root's user id is the group id.
  std::unordered_map<std::uint32_t, std::size_t> slot_of_root;
  GroupPartition part;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t root = uf.find(i);
    const auto [it, inserted] = slot_of_root.try_emplace(root, part.groups.size());
    if (inserted) {
      part.groups.push_back(Group{graph.user_ids()[root], {}});
    }
    part.groups[it->second].members.push_back(graph.user_ids()[i]);
  }
  std::sort(part.groups.begin(), part.groups.end(),
            [](const Group& a, const Group& b) { return a.id < b.id; });
  part.group_of.reserve(n);
  for (const auto& grp : part.groups) {
    for (const UserId u : grp.members) part.group_of[u] = grp.id;
  }
  return part;
}

std::map<std::size_t, std::size_t> group_size_histogram(const GroupPartition& partition) {
  std::map<std::size_t, std::size_t> hist;
  for (const auto& grp : partition.groups) ++hist[grp.members.size()];
  return hist;
}

}  // namespace d2d
