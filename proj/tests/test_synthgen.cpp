#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "d2d/graph.hpp"
#include "d2d/synthgen.hpp"
#include "d2d/trace.hpp"

using namespace d2d;

TEST_CASE("sample_powerlaw_sizes: alpha=50 collapses onto xmin") {
  Rng rng(1);
  const auto sizes = sample_powerlaw_sizes(10000, 50.0, 2, rng);
  std::size_t at_xmin = 0;
  for (const auto s : sizes) {
    CHECK(s >= 2);
    at_xmin += s == 2;
  }
  CHECK(at_xmin >= 9900);
}

TEST_CASE("sample_powerlaw_sizes: deterministic given the seed") {
  Rng a(9), b(9);
  CHECK(sample_powerlaw_sizes(500, 2.5, 2, a) == sample_powerlaw_sizes(500, 2.5, 2, b));
  CHECK_THROWS_AS(sample_powerlaw_sizes(5, 1.0, 2, a), InputError);
  CHECK_THROWS_AS(sample_powerlaw_sizes(5, 2.5, 0, a), InputError);
}

TEST_CASE("generate_trace: config validation") {
  GeneratorConfig config;
  config.category_mix[Category::app] = 0.9;  // no longer sums to 1
  CHECK_THROWS_AS(generate_trace(config), InputError);

  GeneratorConfig bad_degree;
  bad_degree.mean_degree = 3;
  CHECK_THROWS_AS(generate_trace(bad_degree), InputError);

  GeneratorConfig bad_topology;
  bad_topology.intra_group_topology = "grid";
  CHECK_THROWS_AS(generate_trace(bad_topology), InputError);
}

TEST_CASE("generate_trace: singleton group yields empty event list") {
  GeneratorConfig config;
  config.num_groups = 1;
  config.size_xmin = 1;
  config.size_alpha = 50.0;  // forces size 1
  const auto gen = generate_trace(config);
  CHECK(gen.trace.events.empty());
  CHECK(gen.ledger.event_count == 0);
  CHECK(gen.ledger.group_sizes == std::vector<std::uint64_t>{1});
}

TEST_CASE("generate_trace: deterministic byte-identical output, thread independent") {
  GeneratorConfig config;
  config.num_groups = 40;
  config.rng_seed = 777;
  const auto a = generate_trace(config, 1);
  const auto b = generate_trace(config, 1);
  const auto c = generate_trace(config, 8);
  REQUIRE(a.trace.events.size() == b.trace.events.size());
  CHECK(a.trace.events == b.trace.events);
  CHECK(a.trace.events == c.trace.events);
  CHECK(a.ledger.tiers == c.ledger.tiers);

  GeneratorConfig other = config;
  other.rng_seed = 778;
  const auto d = generate_trace(other);
  CHECK(a.trace.events != d.trace.events);
}

TEST_CASE("generate_trace: ledger agrees with the emitted trace") {
  GeneratorConfig config;
  config.num_groups = 80;
  config.rng_seed = 31;
  const auto gen = generate_trace(config);

  CHECK(gen.ledger.event_count == gen.trace.events.size());
  std::uint64_t total_users = 0;
  for (const auto s : gen.ledger.group_sizes) total_users += s;
  CHECK(gen.ledger.group_of.size() == total_users);

  // no cross-group events; all timestamps within the declared span
  for (const auto& ev : gen.trace.events) {
    CHECK(gen.ledger.group_of.at(ev.sender) == gen.ledger.group_of.at(ev.receiver));
    CHECK(ev.ts >= gen.trace.min_ts);
    CHECK(ev.ts <= gen.trace.max_ts);
    CHECK(ev.sender != ev.receiver);
  }
}

TEST_CASE("summarize agrees with the generator ledger on a 1e4-event trace") {
  GeneratorConfig config;
  config.num_groups = 400;
  config.rng_seed = 1212;
  const auto gen = generate_trace(config);
  REQUIRE(gen.trace.events.size() >= 10000);
  const auto summary = summarize(gen.trace.events);
  CHECK(summary.num_events == gen.ledger.event_count);
  // every member of a multi-user group appears in at least one event
  CHECK(summary.num_users == gen.ledger.group_of.size());
  CHECK(summary.min_ts >= gen.trace.min_ts);
  CHECK(summary.max_ts <= gen.trace.max_ts);
}

TEST_CASE("generate_trace: compute_groups recovers the ledger partition exactly") {
  GeneratorConfig config;
  config.num_groups = 150;
  config.rng_seed = 9001;
  const auto gen = generate_trace(config);
  const auto partition = compute_groups(EncounterGraph::from_events(gen.trace.events));

  std::map<GroupId, std::set<UserId>> truth;
  for (const auto& [user, group] : gen.ledger.group_of) truth[group].insert(user);
  std::size_t multi = 0;
  for (const auto& [group, members] : truth) multi += members.size() >= 2;
  REQUIRE(partition.groups.size() == multi);

  for (const auto& [group, members] : truth) {
    if (members.size() < 2) continue;  // singletons never appear in events
    const GroupId lib_group = partition.group_of.at(*members.begin());
    std::set<UserId> lib_members;
    for (const auto& g : partition.groups) {
      if (g.id == lib_group) lib_members.insert(g.members.begin(), g.members.end());
    }
    CHECK(lib_members == members);
  }
}

TEST_CASE("generate_trace: category mix chi-square sanity at 1e5 events") {
  GeneratorConfig config;
  config.num_groups = 2000;
  config.events_per_user_week = 1.0;
  config.rng_seed = 5150;
  const auto gen = generate_trace(config);
  REQUIRE(gen.trace.events.size() > 100000);

  std::array<std::uint64_t, kNumCategories> counts{};
  for (const auto& ev : gen.trace.events) counts[static_cast<int>(ev.category)]++;
  const double n = static_cast<double>(gen.trace.events.size());
  double chi2 = 0.0;
  for (int c = 0; c < kNumCategories; ++c) {
    const double expected = n * config.category_mix.at(static_cast<Category>(c));
    chi2 += (counts[c] - expected) * (counts[c] - expected) / expected;
  }
  // 4 degrees of freedom; chi-square 0.999 quantile is 18.47
  CHECK(chi2 < 18.47);
}

TEST_CASE("generate_trace: gps rate and home-cell locality") {
  GeneratorConfig config;
  config.num_groups = 120;
  config.gps_rate = 0.5;
  config.rng_seed = 60;
  const auto gen = generate_trace(config);
  std::size_t with_geo = 0;
  for (const auto& ev : gen.trace.events) {
    if (!ev.geo) continue;
    ++with_geo;
    const auto home = gen.ledger.home_cell.at(gen.ledger.group_of.at(ev.sender));
    CHECK(std::abs(ev.geo->lat - home.lat) < 10 * config.gps_cell_deg);
    CHECK(std::abs(ev.geo->lon - home.lon) < 10 * config.gps_cell_deg);
  }
  const double rate = static_cast<double>(with_geo) /
                      static_cast<double>(gen.trace.events.size());
  CHECK(rate > 0.4);
  CHECK(rate < 0.6);
}

TEST_CASE("generator config JSON round trip") {
  GeneratorConfig config;
  config.rng_seed = 424242;
  config.num_groups = 77;
  config.zipf_s = 1.25;
  const auto text = config.to_json_text();
  const auto parsed = GeneratorConfig::from_json_text(text);
  CHECK(parsed.rng_seed == config.rng_seed);
  CHECK(parsed.num_groups == config.num_groups);
  CHECK(parsed.zipf_s == config.zipf_s);
  CHECK(parsed.category_mix == config.category_mix);
  CHECK(parsed.tier_mix == config.tier_mix);

  CHECK_THROWS_AS(GeneratorConfig::from_json_text("{nope"), InputError);
  CHECK_THROWS_AS(GeneratorConfig::from_json_text("{\"category_mix\":{\"doc\":1.0}}"),
                  InputError);
}

TEST_CASE("generated trace survives the event-log round trip byte for byte") {
  GeneratorConfig config;
  config.num_groups = 30;
  config.rng_seed = 88;
  const auto gen = generate_trace(config);
  std::ostringstream out;
  write_event_log(out, gen.trace);
  std::istringstream in(out.str());
  const auto parsed = parse_event_log(in, true);
  REQUIRE(parsed.errors.empty());
  std::ostringstream out2;
  write_event_log(out2, parsed.trace);
  CHECK(out.str() == out2.str());
}
