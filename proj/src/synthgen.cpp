#include "d2d/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "d2d/parallel.hpp"

namespace d2d {

namespace {

using ordered_json = nlohmann::ordered_json;

// Per-category median sizes in bytes; individual events draw uniformly from
// [base/2, 2*base).
std::uint64_t category_base_bytes(Category c) {
  switch (c) {
    case Category::app: return 20u << 20;
    case Category::video: return 80u << 20;
    case Category::music: return 6u << 20;
    case Category::image: return 2u << 20;
    case Category::other: return 1u << 20;
  }
  return 1u << 20;
}

struct Edge {
  std::uint32_t a;
  std::uint32_t b;
};

// Watts-Strogatz ring lattice with rewiring; complete graph for n <= k.
// Disconnected results (possible after rewiring) are repaired by bridging
// components with extra edges, so every group is connected by construction.
std::vector<Edge> build_topology(std::uint32_t n, std::uint32_t k, double rewire_prob,
                                 Rng& rng) {
  std::vector<Edge> edges;
  if (n < 2) return edges;
  std::set<std::pair<std::uint32_t, std::uint32_t>> present;
  auto add = [&](std::uint32_t a, std::uint32_t b) {
    if (a == b) return false;
    if (a > b) std::swap(a, b);
    if (!present.insert({a, b}).second) return false;
    edges.push_back(Edge{a, b});
    return true;
  };

  if (n <= k + 1) {
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) add(i, j);
    return edges;
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> lattice;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 1; j <= k / 2; ++j) {
      const std::uint32_t t = (i + j) % n;
      const auto e = std::minmax(i, t);
      lattice.push_back({e.first, e.second});
    }
  }
  std::sort(lattice.begin(), lattice.end());
  lattice.erase(std::unique(lattice.begin(), lattice.end()), lattice.end());

  for (const auto& [a, b] : lattice) {
    if (rng.bernoulli(rewire_prob)) {
      bool placed = false;
      for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
        const auto c = static_cast<std::uint32_t>(rng.uniform_below(n));
        placed = add(a, c);
      }
      if (!placed) add(a, b);
    } else {
      add(a, b);
    }
  }

  // Connectivity repair: union components, bridge smallest-id representatives.
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  for (const auto& e : edges) unite(e.a, e.b);
  std::vector<std::uint32_t> reps;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (find(i) == i) reps.push_back(i);
  }
  for (std::size_t i = 1; i < reps.size(); ++i) {
    add(reps[0], reps[i]);
    unite(reps[0], reps[i]);
  }

  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return edges;
}

// Cumulative Zipf weights over m ranks: P(rank r) proportional to r^-s.
std::vector<double> zipf_cdf(std::uint64_t m, double s) {
  std::vector<double> cdf(m);
  double z = 0.0;
  for (std::uint64_t r = 0; r < m; ++r) {
    z += std::pow(static_cast<double>(r + 1), -s);
    cdf[r] = z;
  }
  for (auto& v : cdf) v /= z;
  return cdf;
}

std::uint64_t sample_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(
      it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

struct CatalogPartition {
  ContentId first = 0;
  std::uint64_t count = 0;
};

void check_prob_map_sums(const GeneratorConfig& c) {
  double cat_sum = 0.0;
  for (const auto& [k, v] : c.category_mix) {
    if (v < 0.0) throw InputError("category_mix probabilities must be non-negative");
    cat_sum += v;
  }
  if (std::abs(cat_sum - 1.0) > 1e-9)
    throw InputError("category_mix must sum to 1 within 1e-9");
  double tier_sum = 0.0;
  for (const auto& [k, v] : c.tier_mix) {
    if (v < 0.0) throw InputError("tier_mix probabilities must be non-negative");
    tier_sum += v;
  }
  if (std::abs(tier_sum - 1.0) > 1e-9) throw InputError("tier_mix must sum to 1 within 1e-9");
}

}  // namespace

void GeneratorConfig::validate() const {
  if (num_groups == 0) throw InputError("num_groups must be positive");
  if (size_alpha <= 1.0) throw InputError("size_alpha must be > 1");
  if (size_xmin < 1) throw InputError("size_xmin must be >= 1");
  if (weeks == 0) throw InputError("weeks must be positive");
  if (events_per_user_week <= 0.0) throw InputError("events_per_user_week must be positive");
  if (catalog_size == 0) throw InputError("catalog_size must be positive");
  if (zipf_s <= 0.0) throw InputError("zipf_s must be positive");
  if (intra_group_topology != "ring_lattice_rewire")
    throw InputError("unknown intra_group_topology: " + intra_group_topology);
  if (rewire_prob < 0.0 || rewire_prob > 1.0) throw InputError("rewire_prob must be in [0,1]");
  if (mean_degree == 0 || mean_degree % 2 != 0)
    throw InputError("mean_degree must be a positive even integer");
  if (gps_cell_deg <= 0.0) throw InputError("gps_cell_deg must be positive");
  if (gps_rate < 0.0 || gps_rate > 1.0) throw InputError("gps_rate must be in [0,1]");
  if (activity_tail <= 0.0) throw InputError("activity_tail must be positive");
  if (bootstrap_fraction <= 0.0 || bootstrap_fraction > 1.0)
    throw InputError("bootstrap_fraction must be in (0,1]");
  check_prob_map_sums(*this);
}

std::vector<std::uint64_t> sample_powerlaw_sizes(std::size_t n, double alpha,
                                                 std::uint64_t xmin, Rng& rng) {
  if (alpha <= 1.0) throw InputError("sample_powerlaw_sizes: alpha must be > 1");
  if (xmin < 1) throw InputError("sample_powerlaw_sizes: xmin must be >= 1");
  std::vector<std::uint64_t> sizes(n);
  const double inv = -1.0 / (alpha - 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.next_double();
    const double v = static_cast<double>(xmin) * std::pow(1.0 - u, inv);
    sizes[i] = v >= static_cast<double>(kMaxGroupSize)
                   ? kMaxGroupSize
                   : static_cast<std::uint64_t>(std::floor(v));
  }
  return sizes;
}

GeneratedTrace generate_trace(const GeneratorConfig& config, unsigned threads) {
  config.validate();

  GeneratedTrace out;
  const Timestamp span = static_cast<Timestamp>(config.weeks) * kSecondsPerWeek;
  out.trace.min_ts = kTraceEpoch;
  out.trace.max_ts = kTraceEpoch + span - 1;

  Rng master(config.rng_seed);
  const auto sizes = sample_powerlaw_sizes(config.num_groups, config.size_alpha,
                                           config.size_xmin, master);
  out.ledger.group_sizes = sizes;

  // Home cells from the master stream, in group order.
  std::vector<GeoPoint> homes(config.num_groups);
  for (std::uint64_t g = 0; g < config.num_groups; ++g) {
    homes[g].lat = -60.0 + 120.0 * master.next_double();
    homes[g].lon = -180.0 + 360.0 * master.next_double();
    out.ledger.home_cell[g] = homes[g];
  }

  std::vector<UserId> base(config.num_groups + 1, 0);
  for (std::uint64_t g = 0; g < config.num_groups; ++g) base[g + 1] = base[g] + sizes[g];
  for (std::uint64_t g = 0; g < config.num_groups; ++g) {
    for (UserId u = base[g]; u < base[g + 1]; ++u) out.ledger.group_of[u] = g;
  }

  // Category CDF in enum order, catalog partitioned contiguously per category.
  std::vector<double> cat_cdf(kNumCategories, 0.0);
  {
    double acc = 0.0;
    for (int c = 0; c < kNumCategories; ++c) {
      const auto it = config.category_mix.find(static_cast<Category>(c));
      acc += it == config.category_mix.end() ? 0.0 : it->second;
      cat_cdf[c] = acc;
    }
    cat_cdf.back() = 1.0;
  }
  std::vector<CatalogPartition> catalog(kNumCategories);
  {
    const std::uint64_t per = config.catalog_size / kNumCategories;
    const std::uint64_t extra = config.catalog_size % kNumCategories;
    ContentId next = 0;
    for (int c = 0; c < kNumCategories; ++c) {
      catalog[c].first = next;
      catalog[c].count = per + (static_cast<std::uint64_t>(c) < extra ? 1 : 0);
      if (catalog[c].count == 0) catalog[c].count = 1;  // tiny catalogs still usable
      next += catalog[c].count;
    }
  }
  std::vector<std::vector<double>> zipf_by_cat(kNumCategories);
  for (int c = 0; c < kNumCategories; ++c) {
    zipf_by_cat[c] = zipf_cdf(catalog[c].count, config.zipf_s);
  }
  std::vector<double> tier_cdf(3, 0.0);
  {
    double acc = 0.0;
    for (int t = 0; t < 3; ++t) {
      const auto it = config.tier_mix.find(static_cast<Tier>(t));
      acc += it == config.tier_mix.end() ? 0.0 : it->second;
      tier_cdf[t] = acc;
    }
    tier_cdf.back() = 1.0;
  }

  struct GroupOutput {
    std::vector<SharingEvent> events;
    std::vector<RelationshipTierRecord> tiers;
  };
  std::vector<GroupOutput> per_group(config.num_groups);

  parallel_for(config.num_groups, threads, [&](std::size_t g) {
    const std::uint32_t n = static_cast<std::uint32_t>(sizes[g]);
    if (n < 2) return;
    Rng rng(Rng::mix(config.rng_seed, g));
    auto& go = per_group[g];

    const auto edges = build_topology(n, static_cast<std::uint32_t>(config.mean_degree),
                                      config.rewire_prob, rng);
    if (edges.empty()) return;

    // Heavy-tailed per-user activity weights; edge rates follow the product
    // of endpoint weights, normalized to the group's event budget.
    std::vector<double> weight(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      weight[i] = std::pow(1.0 - rng.next_double(), -1.0 / config.activity_tail);
    }
    double weight_total = 0.0;
    std::vector<double> edge_weight(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      edge_weight[e] = weight[edges[e].a] * weight[edges[e].b];
      weight_total += edge_weight[e];
    }
    const double budget =
        static_cast<double>(n) * config.events_per_user_week * static_cast<double>(config.weeks);

    const double span_d = static_cast<double>(span);
    const double bootstrap_span = span_d * config.bootstrap_fraction;

    auto emit_event = [&](std::uint32_t a, std::uint32_t b, double t_seconds) {
      SharingEvent ev;
      ev.ts = kTraceEpoch + std::min<Timestamp>(static_cast<Timestamp>(t_seconds), span - 1);
      const bool forward = rng.bernoulli(0.5);
      ev.sender = base[g] + (forward ? a : b);
      ev.receiver = base[g] + (forward ? b : a);
      const double uc = rng.next_double();
      int cat = 0;
      while (cat + 1 < kNumCategories && uc >= cat_cdf[cat]) ++cat;
      ev.category = static_cast<Category>(cat);
      const auto rank = sample_cdf(zipf_by_cat[cat], rng.next_double());
      ev.file = catalog[cat].first + rank;
      const std::uint64_t bb = category_base_bytes(ev.category);
      ev.size_bytes = bb / 2 + rng.uniform_below(bb + bb / 2);
      if (rng.bernoulli(config.gps_rate)) {
        GeoPoint p;
        p.lat = homes[g].lat + rng.gaussian() * config.gps_cell_deg * 0.5;
        p.lon = homes[g].lon + rng.gaussian() * config.gps_cell_deg * 0.5;
        p.lat = std::clamp(p.lat, -90.0, 90.0);
        p.lon = std::clamp(p.lon, -180.0, 180.0);
        ev.geo = p;
      }
      go.events.push_back(ev);
    };

    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto& edge = edges[e];
      // Relationship tier for this edge.
      const double ut = rng.next_double();
      int tier = 0;
      while (tier + 1 < 3 && ut >= tier_cdf[tier]) ++tier;
      go.tiers.push_back(RelationshipTierRecord{base[g] + edge.a, base[g] + edge.b,
                                                static_cast<Tier>(tier)});
      // Formation contact keeps the edge present in the encounter graph.
      emit_event(edge.a, edge.b, rng.next_double() * bootstrap_span);
      // Ongoing contacts.
      const double lam = budget * edge_weight[e] / weight_total;
      const std::uint64_t count = rng.poisson(lam);
      for (std::uint64_t i = 0; i < count; ++i) {
        emit_event(edge.a, edge.b, rng.next_double() * span_d);
      }
    }
  });

  std::size_t total_events = 0, total_tiers = 0;
  for (const auto& go : per_group) {
    total_events += go.events.size();
    total_tiers += go.tiers.size();
  }
  out.trace.events.reserve(total_events);
  out.ledger.tiers.reserve(total_tiers);
  for (auto& go : per_group) {
    out.trace.events.insert(out.trace.events.end(), go.events.begin(), go.events.end());
    out.ledger.tiers.insert(out.ledger.tiers.end(), go.tiers.begin(), go.tiers.end());
  }
  std::stable_sort(out.trace.events.begin(), out.trace.events.end(), event_less);
  out.ledger.event_count = out.trace.events.size();
  return out;
}

namespace {

GeneratorConfig config_from_json(const ordered_json& j) {
  GeneratorConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
  };
  get("rng_seed", c.rng_seed);
  get("num_groups", c.num_groups);
  get("size_alpha", c.size_alpha);
  get("size_xmin", c.size_xmin);
  get("weeks", c.weeks);
  get("events_per_user_week", c.events_per_user_week);
  get("catalog_size", c.catalog_size);
  get("zipf_s", c.zipf_s);
  if (j.contains("category_mix")) {
    c.category_mix.clear();
    for (const auto& [key, value] : j.at("category_mix").items()) {
      const auto cat = category_from_name(key);
      if (!cat) throw InputError("unknown category in category_mix: " + key);
      c.category_mix[*cat] = value.get<double>();
    }
  }
  get("intra_group_topology", c.intra_group_topology);
  get("rewire_prob", c.rewire_prob);
  get("mean_degree", c.mean_degree);
  if (j.contains("tier_mix")) {
    c.tier_mix.clear();
    for (const auto& [key, value] : j.at("tier_mix").items()) {
      const auto tier = tier_from_name(key);
      if (!tier) throw InputError("unknown tier in tier_mix: " + key);
      c.tier_mix[*tier] = value.get<double>();
    }
  }
  get("gps_cell_deg", c.gps_cell_deg);
  get("gps_rate", c.gps_rate);
  get("activity_tail", c.activity_tail);
  get("bootstrap_fraction", c.bootstrap_fraction);
  c.validate();
  return c;
}

}  // namespace

GeneratorConfig GeneratorConfig::from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad generator config JSON: ") + e.what());
  }
  return config_from_json(j);
}

GeneratorConfig GeneratorConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string GeneratorConfig::to_json_text() const {
  ordered_json j;
  j["rng_seed"] = rng_seed;
  j["num_groups"] = num_groups;
  j["size_alpha"] = size_alpha;
  j["size_xmin"] = size_xmin;
  j["weeks"] = weeks;
  j["events_per_user_week"] = events_per_user_week;
  j["catalog_size"] = catalog_size;
  j["zipf_s"] = zipf_s;
  ordered_json mix;
  for (const auto& [cat, p] : category_mix) mix[std::string(category_name(cat))] = p;
  j["category_mix"] = mix;
  j["intra_group_topology"] = intra_group_topology;
  j["rewire_prob"] = rewire_prob;
  j["mean_degree"] = mean_degree;
  ordered_json tiers;
  for (const auto& [tier, p] : tier_mix) tiers[std::string(tier_name(tier))] = p;
  j["tier_mix"] = tiers;
  j["gps_cell_deg"] = gps_cell_deg;
  j["gps_rate"] = gps_rate;
  j["activity_tail"] = activity_tail;
  j["bootstrap_fraction"] = bootstrap_fraction;
  return j.dump(2) + "\n";
}

std::string GroundTruthLedger::to_json_text() const {
  ordered_json j;
  ordered_json groups = ordered_json::object();
  // group_of is large; store the compact inverse (per-group id ranges are not
  // guaranteed, so emit explicit membership lists).
  std::map<GroupId, std::vector<UserId>> members;
  for (const auto& [user, group] : group_of) members[group].push_back(user);
  for (auto& [group, list] : members) {
    std::sort(list.begin(), list.end());
    groups[std::to_string(group)] = list;
  }
  j["groups"] = groups;
  j["group_sizes"] = group_sizes;
  ordered_json tier_rows = ordered_json::array();
  for (const auto& r : tiers) {
    tier_rows.push_back({r.user_a, r.user_b, static_cast<int>(r.tier)});
  }
  j["tiers"] = tier_rows;
  ordered_json homes = ordered_json::object();
  for (const auto& [group, cell] : home_cell) {
    homes[std::to_string(group)] = {cell.lat, cell.lon};
  }
  j["home_cell"] = homes;
  j["event_count"] = event_count;
  return j.dump(2) + "\n";
}

}  // namespace d2d
