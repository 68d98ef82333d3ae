#include <doctest.h>

#include "d2d/influence.hpp"
#include "oracles.hpp"

using namespace d2d;

namespace {

SharingEvent ev(Timestamp ts, UserId s, UserId r) {
  SharingEvent e;
  e.ts = ts;
  e.sender = s;
  e.receiver = r;
  return e;
}

Group group_of(std::vector<UserId> members) {
  Group g;
  std::sort(members.begin(), members.end());
  g.id = members.front();
  g.members = std::move(members);
  return g;
}

}  // namespace

TEST_CASE("forest: chain A->B->C roots at A with subtree 3") {
  const auto group = group_of({'A', 'B', 'C'});
  const std::vector<SharingEvent> events = {ev(1, 'A', 'B'), ev(2, 'B', 'C')};
  const auto forest = build_sharing_forest(events, group);
  REQUIRE(forest.roots == std::vector<UserId>{'A'});
  CHECK(forest.parent.at('B') == 'A');
  CHECK(forest.parent.at('C') == 'B');
  CHECK(forest.subtree_size.at('A') == 3);
  CHECK(forest.depth.at('C') == 2);
}

TEST_CASE("forest: senders-before-receiving stay roots") {
  // B->A then A->B: A's parent is B; B sent before it ever received.
  const auto group = group_of({'A', 'B'});
  const std::vector<SharingEvent> events = {ev(1, 'B', 'A'), ev(2, 'A', 'B')};
  const auto forest = build_sharing_forest(events, group);
  CHECK(forest.roots == std::vector<UserId>{'B'});
  CHECK(forest.parent.at('A') == 'B');
  CHECK(forest.parent.count('B') == 0);
  CHECK(forest.subtree_size.at('B') == 2);
}

TEST_CASE("forest: members with no events are singleton roots") {
  const auto group = group_of({1, 2, 3, 9});
  const std::vector<SharingEvent> events = {ev(5, 1, 2)};
  const auto forest = build_sharing_forest(events, group);
  CHECK(forest.roots == std::vector<UserId>{1, 3, 9});
  CHECK(forest.subtree_size.at(1) == 2);
  CHECK(forest.subtree_size.at(3) == 1);
  CHECK(forest.first_activity.count(3) == 0);
}

TEST_CASE("forest parent map matches the brute-force first-reception scan") {
  Rng rng(404);
  for (int round = 0; round < 300; ++round) {
    const std::uint64_t users = 3 + rng.uniform_below(10);
    const auto events = oracle::random_events(2 + rng.uniform_below(40), users, 0, 1000,
                                              5, rng);
    std::vector<UserId> members(users);
    for (std::uint64_t u = 0; u < users; ++u) members[u] = u;
    const auto forest = build_sharing_forest(events, group_of(members));
    const auto expected = oracle::forest_parents(events);

    REQUIRE(forest.parent.size() == expected.size());
    for (const auto& [child, parent] : expected) {
      CHECK(forest.parent.at(child) == parent);
    }
    // every member reachable from exactly one root
    std::uint64_t covered = 0;
    for (const auto root : forest.roots) covered += forest.subtree_size.at(root);
    CHECK(covered == users);
    // acyclic: every chain terminates at a root
    for (const auto u : members) {
      CHECK(std::find(forest.roots.begin(), forest.roots.end(), forest.root_of(u)) !=
            forest.roots.end());
    }
  }
}

TEST_CASE("forest build is idempotent on its event sequence") {
  Rng rng(11);
  const auto events = oracle::random_events(60, 8, 0, 500, 4, rng);
  std::vector<UserId> members;
  for (UserId u = 0; u < 8; ++u) members.push_back(u);
  const auto group = group_of(members);
  const auto f1 = build_sharing_forest(events, group);
  const auto f2 = build_sharing_forest(events, group);
  CHECK(f1.parent == f2.parent);
  CHECK(f1.roots == f2.roots);
  CHECK(f1.subtree_size == f2.subtree_size);
}

TEST_CASE("tree_distance and common_ancestor_depth") {
  const auto group = group_of({1, 2, 3, 4, 5, 6});
  // 1 -> 2 -> 3, 1 -> 4, 5 and 6 isolated
  const std::vector<SharingEvent> events = {ev(1, 1, 2), ev(2, 2, 3), ev(3, 1, 4)};
  const auto forest = build_sharing_forest(events, group);
  CHECK(*forest.tree_distance(3, 4) == 3);   // 3-2-1-4
  CHECK(*forest.tree_distance(2, 3) == 1);
  CHECK(*forest.tree_distance(1, 1) == 0);
  CHECK(!forest.tree_distance(3, 5).has_value());  // different trees
  CHECK(*forest.common_ancestor_depth(3, 4) == 0); // LCA is root 1
  CHECK(*forest.common_ancestor_depth(2, 3) == 1); // LCA is 2
  CHECK(!forest.common_ancestor_depth(5, 6).has_value());
}

TEST_CASE("select_seed: tree_root picks the largest subtree") {
  const auto group = group_of({1, 2, 3, 4, 5, 6, 7});
  // tree A: 1->2->3, 1->4 (size 4); tree B: 5->6 (size 2); 7 isolated
  const std::vector<SharingEvent> events = {ev(1, 1, 2), ev(2, 2, 3), ev(3, 1, 4),
                                            ev(4, 5, 6)};
  const auto forest = build_sharing_forest(events, group);
  const auto graph = EncounterGraph::from_events(events);
  Rng rng(1);
  const auto choice = select_seed(forest, SeedStrategy::tree_root, graph, group, rng);
  CHECK(choice.seed == 1);
  CHECK(choice.group_id == group.id);
}

TEST_CASE("select_seed: singleton group returns the member for every strategy") {
  const auto group = group_of({42});
  const auto forest = build_sharing_forest({}, group);
  const auto graph = EncounterGraph::from_events({});
  for (const auto strategy : {SeedStrategy::tree_root, SeedStrategy::max_degree,
                              SeedStrategy::max_strength, SeedStrategy::random}) {
    Rng rng(3);
    CHECK(select_seed(forest, strategy, graph, group, rng).seed == 42);
  }
}

TEST_CASE("select_seed: max_degree vs max_strength differ when weights skew") {
  const auto group = group_of({1, 2, 3, 4});
  // node 1 has degree 3; node 2 has degree 1 but a heavy repeated edge
  std::vector<SharingEvent> events = {ev(1, 1, 2), ev(2, 1, 3), ev(3, 1, 4)};
  for (Timestamp t = 10; t < 20; ++t) events.push_back(ev(t, 2, 1));
  const auto graph = EncounterGraph::from_events(events);
  const auto forest = build_sharing_forest(events, group);
  Rng rng(5);
  CHECK(select_seed(forest, SeedStrategy::max_degree, graph, group, rng).seed == 1);
  // strength: node 1 = 3 + 10, node 2 = 1 + 10 -> still 1; check tie-break path
  const auto strength_choice = select_seed(forest, SeedStrategy::max_strength, graph, group, rng);
  CHECK(strength_choice.seed == 1);
}

TEST_CASE("select_seed: tree_root tie-break by earliest first activity then id") {
  const auto group = group_of({1, 2, 3, 4});
  // two trees of size 2: roots 1 (first activity t=5) and 3 (t=2)
  const std::vector<SharingEvent> events = {ev(5, 1, 2), ev(2, 3, 4)};
  const auto forest = build_sharing_forest(events, group);
  const auto graph = EncounterGraph::from_events(events);
  Rng rng(1);
  CHECK(select_seed(forest, SeedStrategy::tree_root, graph, group, rng).seed == 3);
}

TEST_CASE("select_seed: random draws a member, exhaustive is rejected here") {
  const auto group = group_of({10, 20, 30});
  const auto forest = build_sharing_forest({}, group);
  const auto graph = EncounterGraph::from_events({});
  Rng rng(8);
  const auto choice = select_seed(forest, SeedStrategy::random, graph, group, rng);
  CHECK(std::find(group.members.begin(), group.members.end(), choice.seed) !=
        group.members.end());
  Rng rng2(8);
  CHECK_THROWS_AS(select_seed(forest, SeedStrategy::exhaustive, graph, group, rng2),
                  InputError);
}

TEST_CASE("select_seed: empty group is an error") {
  Group empty;
  const auto graph = EncounterGraph::from_events({});
  SharingForest forest;
  Rng rng(0);
  CHECK_THROWS_AS(select_seed(forest, SeedStrategy::tree_root, graph, empty, rng), InputError);
}

TEST_CASE("strategy names round trip") {
  for (const auto s : {SeedStrategy::tree_root, SeedStrategy::max_degree,
                       SeedStrategy::max_strength, SeedStrategy::random,
                       SeedStrategy::exhaustive}) {
    CHECK(seed_strategy_from_name(seed_strategy_name(s)) == s);
  }
  CHECK(!seed_strategy_from_name("bogus").has_value());
}
