#include "d2d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "d2d/parallel.hpp"

namespace d2d {

namespace {

// Group-induced subgraph with local dense indices and sorted adjacency.
struct LocalGraph {
  std::vector<std::vector<std::uint32_t>> adj;

  static LocalGraph induce(const EncounterGraph& graph, const Group& group) {
    LocalGraph lg;
    const std::size_t n = group.members.size();
    lg.adj.resize(n);
    std::unordered_map<std::uint32_t, std::uint32_t> local;  // graph idx -> local
    local.reserve(n);
    std::vector<EncounterGraph::NodeIndex> gidx(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      gidx[i] = graph.index_of(group.members[i]);
      local[gidx[i]] = i;
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      for (const auto j : graph.neighbors(gidx[i])) {
        const auto it = local.find(j);
        if (it != local.end()) lg.adj[i].push_back(it->second);
      }
      std::sort(lg.adj[i].begin(), lg.adj[i].end());
    }
    return lg;
  }
};

std::size_t sorted_intersection_size(const std::vector<std::uint32_t>& a,
                                     const std::vector<std::uint32_t>& b) {
  std::size_t count = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (a[i] > b[j]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

// Closed-triple count through node i (each triangle at i counted twice).
std::size_t closed_pairs_at(const LocalGraph& lg, std::uint32_t i) {
  std::size_t total = 0;
  for (const auto j : lg.adj[i]) total += sorted_intersection_size(lg.adj[i], lg.adj[j]);
  return total;  // = 2 * triangles through i
}

double local_clustering_at(const LocalGraph& lg, std::uint32_t i) {
  const std::size_t d = lg.adj[i].size();
  if (d < 2) return 0.0;
  return static_cast<double>(closed_pairs_at(lg, i)) /
         (static_cast<double>(d) * static_cast<double>(d - 1));
}

double global_clustering_of(const LocalGraph& lg) {
  std::size_t closed = 0;
  std::size_t triples = 0;
  for (std::uint32_t i = 0; i < lg.adj.size(); ++i) {
    const std::size_t d = lg.adj[i].size();
    triples += d * (d - 1) / 2;
    closed += closed_pairs_at(lg, i);  // sums to 6 * num_triangles
  }
  if (triples == 0) return 0.0;
  // 3 * triangles / triples == (closed / 2) / triples
  return static_cast<double>(closed) / 2.0 / static_cast<double>(triples);
}

struct BfsAccum {
  std::uint64_t dist_sum = 0;
  std::uint64_t pair_count = 0;
  std::size_t ecc_max = 0;
};

BfsAccum bfs_from(const LocalGraph& lg, std::uint32_t src, std::vector<std::int32_t>& dist,
                  std::vector<std::uint32_t>& queue) {
  std::fill(dist.begin(), dist.end(), -1);
  dist[src] = 0;
  queue.clear();
  queue.push_back(src);
  BfsAccum acc;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto u = queue[head];
    for (const auto v : lg.adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
        acc.dist_sum += static_cast<std::uint64_t>(dist[v]);
        ++acc.pair_count;
        acc.ecc_max = std::max(acc.ecc_max, static_cast<std::size_t>(dist[v]));
      }
    }
  }
  if (queue.size() != lg.adj.size()) {
    throw InputError("path_stats: group is not connected");
  }
  return acc;
}

PathStats path_stats_local(const LocalGraph& lg) {
  const std::size_t n = lg.adj.size();
  PathStats ps;
  if (n <= 1) {
    ps.diameter = 0;
    return ps;
  }
  std::vector<std::uint32_t> sources;
  if (n > kExactPathStatsLimit) {
    ps.approximate = true;
    const std::size_t stride = n / kSampledBfsSources;
    for (std::size_t s = 0; s < kSampledBfsSources; ++s) sources.push_back(s * stride);
  } else {
    sources.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) sources[i] = i;
  }
  std::vector<std::int32_t> dist(n);
  std::vector<std::uint32_t> queue;
  queue.reserve(n);
  std::uint64_t dist_sum = 0, pairs = 0;
  std::size_t diam = 0;
  for (const auto s : sources) {
    const auto acc = bfs_from(lg, s, dist, queue);
    dist_sum += acc.dist_sum;
    pairs += acc.pair_count;
    diam = std::max(diam, acc.ecc_max);
  }
  ps.avg_path_length = static_cast<double>(dist_sum) / static_cast<double>(pairs);
  ps.diameter = diam;
  return ps;
}

}  // namespace

double local_clustering(const EncounterGraph& graph, UserId node) {
  const auto i = graph.index_of(node);
  const auto nbrs = graph.neighbors(i);
  const std::size_t d = nbrs.size();
  if (d < 2) return 0.0;
  std::size_t closed = 0;
  for (const auto j : nbrs) {
    const auto nj = graph.neighbors(j);
    std::size_t a = 0, b = 0;
    while (a < nbrs.size() && b < nj.size()) {
      if (nbrs[a] < nj[b]) {
        ++a;
      } else if (nbrs[a] > nj[b]) {
        ++b;
      } else {
        ++closed;
        ++a;
        ++b;
      }
    }
  }
  return static_cast<double>(closed) / (static_cast<double>(d) * static_cast<double>(d - 1));
}

double global_clustering(const EncounterGraph& graph) {
  std::size_t closed = 0;
  std::size_t triples = 0;
  const std::size_t n = graph.num_nodes();
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto nbrs = graph.neighbors(i);
    const std::size_t d = nbrs.size();
    triples += d * (d - 1) / 2;
    for (const auto j : nbrs) {
      const auto nj = graph.neighbors(j);
      std::size_t a = 0, b = 0;
      while (a < nbrs.size() && b < nj.size()) {
        if (nbrs[a] < nj[b]) {
          ++a;
        } else if (nbrs[a] > nj[b]) {
          ++b;
        } else {
          ++closed;
          ++a;
          ++b;
        }
      }
    }
  }
  if (triples == 0) return 0.0;
  return static_cast<double>(closed) / 2.0 / static_cast<double>(triples);
}

PathStats path_stats(const EncounterGraph& graph, const Group& group) {
  return path_stats_local(LocalGraph::induce(graph, group));
}

std::vector<GroupMetrics> compute_group_metrics(const EncounterGraph& graph,
                                                const GroupPartition& partition,
                                                unsigned threads) {
  std::vector<GroupMetrics> out(partition.groups.size());
  parallel_for(partition.groups.size(), threads, [&](std::size_t gi) {
    const Group& group = partition.groups[gi];
    const auto lg = LocalGraph::induce(graph, group);
    GroupMetrics m;
    m.group_id = group.id;
    m.size = group.members.size();
    m.global_clustering = global_clustering_of(lg);
    double local_sum = 0.0;
    for (std::uint32_t i = 0; i < lg.adj.size(); ++i) local_sum += local_clustering_at(lg, i);
    m.mean_local_clustering = m.size == 0 ? 0.0 : local_sum / static_cast<double>(m.size);
    const auto ps = path_stats_local(lg);
    m.avg_path_length = ps.avg_path_length;
    m.diameter = ps.diameter;
    m.approximate = ps.approximate;
    out[gi] = m;
  });
  return out;
}

namespace {

// Fitted discrete CDF table over [xmin, kmax] for exponent alpha:
// P(X = k) proportional to k^-alpha with the tail beyond kmax folded into the
// normalization via an integral bound.
std::vector<double> fitted_cdf(double alpha, std::uint64_t xmin, std::uint64_t kmax) {
  std::vector<double> cdf;
  cdf.reserve(kmax - xmin + 1);
  double z = 0.0;
  for (std::uint64_t k = xmin; k <= kmax; ++k) {
    z += std::pow(static_cast<double>(k), -alpha);
    cdf.push_back(z);
  }
  const double tail = std::pow(static_cast<double>(kmax) + 0.5, 1.0 - alpha) / (alpha - 1.0);
  const double norm = z + tail;
  for (auto& v : cdf) v /= norm;
  return cdf;
}

}  // namespace

PowerLawFit fit_powerlaw_mle(const std::vector<std::uint64_t>& samples, std::uint64_t xmin) {
  if (xmin < 1) throw InputError("fit_powerlaw_mle: xmin must be >= 1");
  std::vector<std::uint64_t> tail;
  tail.reserve(samples.size());
  for (const auto x : samples) {
    if (x >= xmin) tail.push_back(x);
  }
  if (tail.size() < 2) throw InputError("fit_powerlaw_mle: fewer than 2 tail samples");
  std::sort(tail.begin(), tail.end());

  const double shift = static_cast<double>(xmin) - 0.5;
  double log_sum = 0.0;
  for (const auto x : tail) log_sum += std::log(static_cast<double>(x) / shift);
  PowerLawFit fit;
  fit.xmin = xmin;
  fit.n_tail = tail.size();
  fit.alpha_hat = 1.0 + static_cast<double>(tail.size()) / log_sum;

  const std::uint64_t kmax = tail.back();
  const auto cdf = fitted_cdf(fit.alpha_hat, xmin, kmax);
  const double n = static_cast<double>(tail.size());
  double ks = 0.0;
  std::size_t seen = 0;
  for (std::uint64_t k = xmin; k <= kmax; ++k) {
    while (seen < tail.size() && tail[seen] == k) ++seen;
    const double emp = static_cast<double>(seen) / n;
    ks = std::max(ks, std::abs(emp - cdf[k - xmin]));
  }
  fit.ks_stat = ks;
  return fit;
}

PowerLawFit fit_powerlaw_scan(const std::vector<std::uint64_t>& samples, std::size_t min_tail) {
  std::vector<std::uint64_t> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::uint64_t> candidates(sorted);
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  PowerLawFit best;
  bool have = false;
  for (const auto c : candidates) {
    if (c < 1) continue;
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), c);
    const std::size_t tail_n = static_cast<std::size_t>(sorted.end() - first);
    if (tail_n < std::max<std::size_t>(min_tail, 2)) break;
    const auto fit = fit_powerlaw_mle(sorted, c);
    if (!have || fit.ks_stat < best.ks_stat) {
      best = fit;
      have = true;
    }
  }
  if (!have) throw InputError("fit_powerlaw_scan: no candidate xmin with enough tail samples");
  return best;
}

}  // namespace d2d
