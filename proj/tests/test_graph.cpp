#include <doctest.h>

#include <map>
#include <set>

#include "d2d/graph.hpp"
#include "oracles.hpp"

using namespace d2d;

namespace {

SharingEvent ev(Timestamp ts, UserId s, UserId r, std::uint64_t bytes = 1) {
  SharingEvent e;
  e.ts = ts;
  e.sender = s;
  e.receiver = r;
  e.file = 1;
  e.size_bytes = bytes;
  return e;
}

std::vector<SharingEvent> events_from(const oracle::SmallGraph& g) {
  std::vector<SharingEvent> events;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if (g.adj[i][j]) events.push_back(ev(static_cast<Timestamp>(i + j), i, j));
    }
  }
  return events;
}

}  // namespace

TEST_CASE("build_encounter_graph: direction ignored, stats aggregated") {
  const std::vector<SharingEvent> events = {ev(1, 'A', 'B', 10), ev(5, 'B', 'A', 20)};
  const auto g = EncounterGraph::from_events(events);
  CHECK(g.num_nodes() == 2);
  CHECK(g.num_edges() == 1);
  const auto* stats = g.edge_stats('A', 'B');
  REQUIRE(stats != nullptr);
  CHECK(stats->event_count == 2);
  CHECK(stats->total_bytes == 30);
  CHECK(stats->first_ts == 1);
  CHECK(stats->last_ts == 5);
  CHECK(g.edge_stats('B', 'A') == stats);
}

TEST_CASE("build_encounter_graph: empty trace gives empty graph") {
  const auto g = EncounterGraph::from_events({});
  CHECK(g.num_nodes() == 0);
  CHECK(g.num_edges() == 0);
}

TEST_CASE("build_encounter_graph: edge event counts sum to |events|") {
  Rng rng(5);
  const auto events = oracle::random_events(700, 60, 0, 10000, 30, rng);
  const auto g = EncounterGraph::from_events(events);
  std::uint64_t total = 0;
  for (const auto u : g.user_ids()) {
    total += g.strength(g.index_of(u));
  }
  CHECK(total == 2 * events.size());  // each event counted at both endpoints
}

TEST_CASE("compute_groups: hand-checkable components") {
  const std::vector<SharingEvent> events = {ev(1, 1, 2), ev(2, 2, 3), ev(3, 10, 11)};
  const auto partition = compute_groups(EncounterGraph::from_events(events));
  REQUIRE(partition.groups.size() == 2);
  CHECK(partition.groups[0].id == 1);
  CHECK(partition.groups[0].members == std::vector<UserId>{1, 2, 3});
  CHECK(partition.groups[1].id == 10);
  CHECK(partition.groups[1].members == std::vector<UserId>{10, 11});
  CHECK(partition.group_of.at(3) == 1);
  CHECK(partition.group_of.at(11) == 10);
}

TEST_CASE("compute_groups matches BFS labeling on 1000 random graphs") {
  Rng rng(99);
  for (int round = 0; round < 1000; ++round) {
    const std::size_t n = 2 + rng.uniform_below(49);
    const auto g = oracle::random_graph(n, 0.08 + 0.2 * rng.next_double(), rng);
    const auto labels = oracle::bfs_components(g);

    const auto events = events_from(g);
    if (events.empty()) continue;
    const auto partition = compute_groups(EncounterGraph::from_events(events));

    // The library partition covers only users with events; compare component
    // structure over those.
    std::map<std::size_t, std::set<UserId>> expected;
    std::set<UserId> with_edges;
    for (const auto& e : events) {
      with_edges.insert(e.sender);
      with_edges.insert(e.receiver);
    }
    for (const UserId u : with_edges) expected[labels[u]].insert(u);

    std::map<std::size_t, std::set<UserId>> actual;
    for (const auto& group : partition.groups) {
      actual[group.id] = std::set<UserId>(group.members.begin(), group.members.end());
    }
    REQUIRE(actual.size() == expected.size());
    for (const auto& [label, members] : expected) {
      // group id = smallest member id = its BFS label here
      REQUIRE(actual.count(label));
      CHECK(actual.at(label) == members);
    }
    // group_of agrees with pairwise connectivity
    for (const UserId u : with_edges) {
      for (const UserId v : with_edges) {
        CHECK((partition.group_of.at(u) == partition.group_of.at(v)) ==
              (labels[u] == labels[v]));
      }
    }
  }
}

TEST_CASE("compute_groups: partition invariant under event order") {
  Rng rng(7);
  auto events = oracle::random_events(200, 30, 0, 1000, 10, rng);
  const auto base = compute_groups(EncounterGraph::from_events(events));
  for (int round = 0; round < 3; ++round) {
    for (std::size_t i = events.size(); i > 1; --i) {
      std::swap(events[i - 1], events[rng.uniform_below(i)]);
    }
    const auto shuffled = compute_groups(EncounterGraph::from_events(events));
    REQUIRE(shuffled.groups.size() == base.groups.size());
    for (std::size_t i = 0; i < base.groups.size(); ++i) {
      CHECK(shuffled.groups[i].id == base.groups[i].id);
      CHECK(shuffled.groups[i].members == base.groups[i].members);
    }
  }
}

TEST_CASE("group_size_histogram: exact counts") {
  CHECK(group_size_histogram(GroupPartition{}).empty());

  const std::vector<SharingEvent> events = {ev(1, 1, 2), ev(2, 2, 3), ev(3, 10, 11)};
  const auto hist = group_size_histogram(compute_groups(EncounterGraph::from_events(events)));
  REQUIRE(hist.size() == 2);
  CHECK(hist.at(3) == 1);
  CHECK(hist.at(2) == 1);
}
