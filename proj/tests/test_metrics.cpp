#include <doctest.h>

#include <cmath>

#include "d2d/graph.hpp"
#include "d2d/metrics.hpp"
#include "d2d/synthgen.hpp"
#include "oracles.hpp"

namespace { using EvList = std::vector<d2d::SharingEvent>; }

using namespace d2d;

namespace {

SharingEvent ev(UserId s, UserId r) {
  SharingEvent e;
  e.ts = static_cast<Timestamp>(s * 131 + r);
  e.sender = s;
  e.receiver = r;
  return e;
}

std::vector<SharingEvent> events_from(const oracle::SmallGraph& g) {
  std::vector<SharingEvent> events;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if (g.adj[i][j]) events.push_back(ev(i, j));
    }
  }
  return events;
}

Group whole_graph_group(const EncounterGraph& g) {
  Group group;
  group.id = 0;
  group.members = g.user_ids();
  return group;
}

}  // namespace

TEST_CASE("local_clustering: star center 0, triangle 1") {
  // star K1,3 centered at 0
  const auto star = EncounterGraph::from_events(EvList{ev(0, 1), ev(0, 2), ev(0, 3)});
  CHECK(local_clustering(star, 0) == 0.0);
  CHECK(local_clustering(star, 1) == 0.0);  // degree 1

  const auto tri = EncounterGraph::from_events(EvList{ev(0, 1), ev(1, 2), ev(0, 2)});
  for (UserId u : {0, 1, 2}) CHECK(local_clustering(tri, u) == 1.0);
  CHECK_THROWS_AS(local_clustering(tri, 42), InputError);
}

TEST_CASE("global_clustering: K3 is 1, path is 0") {
  const auto tri = EncounterGraph::from_events(EvList{ev(0, 1), ev(1, 2), ev(0, 2)});
  CHECK(global_clustering(tri) == 1.0);
  const auto path = EncounterGraph::from_events(EvList{ev(0, 1), ev(1, 2)});
  CHECK(global_clustering(path) == 0.0);
}

TEST_CASE("clustering matches brute force on 500 random graphs") {
  Rng rng(11);
  for (int round = 0; round < 500; ++round) {
    const std::size_t n = 3 + rng.uniform_below(28);
    const auto g = oracle::random_graph(n, 0.1 + 0.4 * rng.next_double(), rng);
    const auto events = events_from(g);
    if (events.empty()) continue;
    const auto graph = EncounterGraph::from_events(events);

    CHECK(global_clustering(graph) == doctest::Approx(oracle::global_clustering(g)).epsilon(1e-12));
    for (const UserId u : graph.user_ids()) {
      CHECK(local_clustering(graph, u) ==
            doctest::Approx(oracle::local_clustering(g, u)).epsilon(1e-12));
    }
  }
}

TEST_CASE("path_stats: hand computations") {
  // path A-B-C: avg = 4/3, diameter 2
  const auto path = EncounterGraph::from_events(EvList{ev(0, 1), ev(1, 2)});
  const auto ps = path_stats(path, whole_graph_group(path));
  REQUIRE(ps.avg_path_length.has_value());
  CHECK(*ps.avg_path_length == doctest::Approx(4.0 / 3.0));
  CHECK(ps.diameter == 2);
  CHECK(!ps.approximate);

  // K4: avg 1, diameter 1
  const auto k4 = EncounterGraph::from_events(
      EvList{ev(0, 1), ev(0, 2), ev(0, 3), ev(1, 2), ev(1, 3), ev(2, 3)});
  const auto k4_stats = path_stats(k4, whole_graph_group(k4));
  CHECK(*k4_stats.avg_path_length == doctest::Approx(1.0));
  CHECK(k4_stats.diameter == 1);
}

TEST_CASE("path_stats: size-1 group and disconnected group") {
  const auto g = EncounterGraph::from_events(EvList{ev(0, 1), ev(2, 3)});
  Group singleton;
  singleton.members = {0};
  const auto ps = path_stats(g, singleton);
  CHECK(!ps.avg_path_length.has_value());
  CHECK(ps.diameter == 0);

  CHECK_THROWS_AS(path_stats(g, whole_graph_group(g)), InputError);
}

TEST_CASE("path_stats matches Floyd-Warshall on random connected graphs") {
  Rng rng(23);
  int tested = 0;
  while (tested < 300) {
    const std::size_t n = 2 + rng.uniform_below(49);
    const auto g = oracle::random_graph(n, 0.15 + 0.3 * rng.next_double(), rng);
    const auto dist = oracle::floyd_warshall(g);
    bool connected = true;
    for (std::size_t i = 0; i < n && connected; ++i) {
      for (std::size_t j = 0; j < n && connected; ++j) {
        if (dist[i][j] >= oracle::kUnreachable) connected = false;
      }
    }
    if (!connected) continue;
    ++tested;

    std::uint64_t sum = 0;
    int diameter = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) {
          sum += static_cast<std::uint64_t>(dist[i][j]);
          diameter = std::max(diameter, dist[i][j]);
        }
      }
    }
    const auto graph = EncounterGraph::from_events(events_from(g));
    const auto ps = path_stats(graph, whole_graph_group(graph));
    if (n == 1) continue;
    REQUIRE(ps.avg_path_length.has_value());
    CHECK(*ps.avg_path_length ==
          doctest::Approx(static_cast<double>(sum) / static_cast<double>(n * (n - 1))));
    CHECK(ps.diameter == static_cast<std::size_t>(diameter));
  }
}

TEST_CASE("metrics invariant under node relabeling") {
  Rng rng(31);
  for (int round = 0; round < 20; ++round) {
    const std::size_t n = 5 + rng.uniform_below(20);
    const auto g = oracle::random_graph(n, 0.3, rng);
    const auto events = events_from(g);
    if (events.empty()) continue;

    // random permutation of ids
    std::vector<UserId> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = 1000 + i * 7;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_below(i)]);
    auto renamed = events;
    for (auto& e : renamed) {
      e.sender = perm[e.sender];
      e.receiver = perm[e.receiver];
    }

    const auto base = EncounterGraph::from_events(events);
    const auto mapped = EncounterGraph::from_events(renamed);
    CHECK(global_clustering(base) == doctest::Approx(global_clustering(mapped)).epsilon(1e-12));

    const auto parts_a = compute_groups(base);
    const auto parts_b = compute_groups(mapped);
    auto hist_a = group_size_histogram(parts_a);
    auto hist_b = group_size_histogram(parts_b);
    CHECK(hist_a == hist_b);
  }
}

TEST_CASE("fit_powerlaw_mle: closed form when all samples equal xmin") {
  const std::vector<std::uint64_t> samples(50, 2);
  const auto fit = fit_powerlaw_mle(samples, 2);
  const double expected = 1.0 + 1.0 / std::log(2.0 / 1.5);
  CHECK(fit.alpha_hat == doctest::Approx(expected).epsilon(1e-12));
  CHECK(fit.alpha_hat == doctest::Approx(4.476).epsilon(1e-3));
  CHECK(fit.n_tail == 50);
}

TEST_CASE("fit_powerlaw_mle: duplicating the sample list leaves alpha unchanged") {
  Rng rng(3);
  auto samples = sample_powerlaw_sizes(2000, 2.5, 2, rng);
  auto doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  const auto fit1 = fit_powerlaw_mle(samples, 2);
  const auto fit2 = fit_powerlaw_mle(doubled, 2);
  CHECK(fit1.alpha_hat == doctest::Approx(fit2.alpha_hat).epsilon(1e-12));
  CHECK(fit2.n_tail == 2 * fit1.n_tail);
}

TEST_CASE("fit_powerlaw_mle: estimator plateau of the floor sampler at xmin=2") {
  // The continuous-approximation sampler plus the half-shift estimator is a
  // biased pair at small xmin: the asymptotic value for alpha=2.5 sits near
  // 2.21, not 2.5. Semi-analytic oracle: E[ln(X/1.5)] computed from the exact
  // tail law P(X >= k) = (k/2)^-(alpha-1), then alpha_hat = 1 + 1/E.
  const double alpha = 2.5;
  double expectation = std::log(2.0 / 1.5);
  for (std::uint64_t k = 3; k <= 1'000'000; ++k) {
    expectation += std::pow(static_cast<double>(k) / 2.0, -(alpha - 1.0)) *
                   std::log(static_cast<double>(k) / static_cast<double>(k - 1));
  }
  // truncation remainder is below 2e-9 here
  const double plateau = 1.0 + 1.0 / expectation;

  Rng rng(17);
  const auto samples = sample_powerlaw_sizes(10000, alpha, 2, rng);
  const auto fit = fit_powerlaw_mle(samples, 2);
  // n = 1e4 puts the standard error near 0.013; allow 4 sigma.
  CHECK(fit.alpha_hat == doctest::Approx(plateau).epsilon(0.025));
  CHECK(plateau == doctest::Approx(2.217).epsilon(0.01));
}

TEST_CASE("fit_powerlaw_mle: recovery at xmin=16 within 0.1") {
  for (const double alpha : {2.0, 2.5, 3.0}) {
    Rng rng(static_cast<std::uint64_t>(alpha * 1000));
    const auto samples = sample_powerlaw_sizes(10000, alpha, 16, rng);
    const auto fit = fit_powerlaw_mle(samples, 16);
    CHECK(std::abs(fit.alpha_hat - alpha) < 0.1);
    CHECK(fit.n_tail == 10000);
    CHECK(fit.ks_stat > 0.0);
    CHECK(fit.ks_stat < 0.05);
  }
}

TEST_CASE("fit_powerlaw_mle: error paths") {
  CHECK_THROWS_AS(fit_powerlaw_mle({5}, 2), InputError);
  CHECK_THROWS_AS(fit_powerlaw_mle({1, 1, 1}, 2), InputError);  // no tail samples
  CHECK_THROWS_AS(fit_powerlaw_mle({3, 4, 5}, 0), InputError);
}

TEST_CASE("fit_powerlaw_scan picks a reasonable xmin") {
  Rng rng(5);
  const auto samples = sample_powerlaw_sizes(5000, 2.5, 4, rng);
  const auto fit = fit_powerlaw_scan(samples, 100);
  CHECK(fit.xmin >= 4);
  CHECK(fit.alpha_hat > 1.5);
  CHECK(fit.n_tail >= 100);
}

TEST_CASE("compute_group_metrics: identical across thread counts") {
  GeneratorConfig config;
  config.num_groups = 60;
  config.rng_seed = 4242;
  const auto gen = generate_trace(config);
  const auto graph = EncounterGraph::from_events(gen.trace.events);
  const auto partition = compute_groups(graph);
  const auto m1 = compute_group_metrics(graph, partition, 1);
  const auto m8 = compute_group_metrics(graph, partition, 8);
  REQUIRE(m1.size() == m8.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1[i].group_id == m8[i].group_id);
    CHECK(m1[i].size == m8[i].size);
    CHECK(m1[i].global_clustering == m8[i].global_clustering);
    CHECK(m1[i].mean_local_clustering == m8[i].mean_local_clustering);
    CHECK(m1[i].avg_path_length == m8[i].avg_path_length);
    CHECK(m1[i].diameter == m8[i].diameter);
    CHECK(m1[i].diameter <= m1[i].size - 1);
    CHECK(m1[i].global_clustering >= 0.0);
    CHECK(m1[i].global_clustering <= 1.0);
    if (m1[i].size >= 2) {
      REQUIRE(m1[i].avg_path_length.has_value());
      CHECK(static_cast<double>(m1[i].diameter) >= *m1[i].avg_path_length);
    }
  }
}
