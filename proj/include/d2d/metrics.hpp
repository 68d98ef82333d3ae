#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "d2d/graph.hpp"

namespace d2d {

// All metrics below are computed on the unweighted simple graph; edge
// multiplicities are ignored.

// (2 * triangles through node) / (deg * (deg - 1)); 0 when deg < 2.
double local_clustering(const EncounterGraph& graph, UserId node);

// Transitivity: 3 * triangles / connected triples; 0 when no triples.
double global_clustering(const EncounterGraph& graph);

struct PathStats {
  std::optional<double> avg_path_length;  // unset for size-1 groups
  std::size_t diameter = 0;
  bool approximate = false;  // sampled BFS sources were used
};

// BFS from every member over the group-induced subgraph, averaging over all
// ordered pairs u != v. Groups larger than kExactPathStatsLimit fall back to
// kSampledBfsSources sampled sources; avg is then an estimate and diameter a
// lower bound, flagged via `approximate`.
inline constexpr std::size_t kExactPathStatsLimit = 100000;
inline constexpr std::size_t kSampledBfsSources = 256;

PathStats path_stats(const EncounterGraph& graph, const Group& group);

struct GroupMetrics {
  GroupId group_id = 0;
  std::size_t size = 0;
  double global_clustering = 0.0;
  double mean_local_clustering = 0.0;
  std::optional<double> avg_path_length;
  std::size_t diameter = 0;
  bool approximate = false;
};

// Per-group metrics over the group-induced subgraphs, parallel across groups,
// output ordered by group id.
std::vector<GroupMetrics> compute_group_metrics(const EncounterGraph& graph,
                                                const GroupPartition& partition,
                                                unsigned threads = 1);

struct PowerLawFit {
  double alpha_hat = 0.0;
  std::uint64_t xmin = 0;
  std::size_t n_tail = 0;
  double ks_stat = 0.0;
};

// Discrete-MLE approximation at fixed xmin:
//   alpha_hat = 1 + n_tail / sum_{x >= xmin} ln(x / (xmin - 0.5))
// ks_stat is the max CDF deviation between the tail empirical CDF and the
// fitted discrete CDF.
PowerLawFit fit_powerlaw_mle(const std::vector<std::uint64_t>& samples, std::uint64_t xmin);

// Clauset-style scan: fits every candidate xmin among the distinct sample
// values (with at least min_tail tail samples) and returns the fit with the
// smallest KS statistic.
PowerLawFit fit_powerlaw_scan(const std::vector<std::uint64_t>& samples,
                              std::size_t min_tail = 10);

}  // namespace d2d
