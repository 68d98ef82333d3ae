#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "d2d/rng.hpp"
#include "d2d/trace.hpp"
#include "d2d/types.hpp"

namespace d2d {

// Trace start corresponding to 2016-08-01T00:00:00Z.
inline constexpr Timestamp kTraceEpoch = 1470009600;

// Synthetic-trace generator calibrated so that the downstream analytics
// reproduce the qualitative targets: power-law group sizes, small-world
// intra-group topology with diameters concentrated in [6, 10] for groups of
// 30+ members, skewed per-category content popularity with app/video leading
// redundancy, and seeded replays covering about half of a group.
struct GeneratorConfig {
  std::uint64_t rng_seed = 20160801;
  std::uint64_t num_groups = 2000;
  double size_alpha = 2.5;      // power-law exponent for group sizes
  std::uint64_t size_xmin = 2;  // smallest group size
  std::uint64_t weeks = 13;
  double events_per_user_week = 0.3;  // expected ongoing events per user-week
  std::uint64_t catalog_size = 5000;
  double zipf_s = 1.0;
  std::map<Category, double> category_mix = {
      {Category::app, 0.35}, {Category::video, 0.30}, {Category::music, 0.15},
      {Category::image, 0.15}, {Category::other, 0.05}};
  std::string intra_group_topology = "ring_lattice_rewire";
  double rewire_prob = 0.10;
  std::uint64_t mean_degree = 4;  // even; groups of size <= mean_degree are complete
  std::map<Tier, double> tier_mix = {
      {Tier::stranger, 0.5}, {Tier::friend_tier, 0.3}, {Tier::family, 0.2}};
  double gps_cell_deg = 0.01;
  double gps_rate = 0.2;
  // Pareto tail exponent for per-user activity weights; smaller = heavier
  // hubs. Edge event rates scale with the product of endpoint weights.
  double activity_tail = 0.6;
  // Every topology edge gets one formation contact uniform in the first
  // bootstrap_fraction of the span, which keeps each group a single
  // encounter component.
  double bootstrap_fraction = 0.5;

  void validate() const;  // throws InputError on bad values

  static GeneratorConfig from_json_text(const std::string& text);
  static GeneratorConfig from_json_file(const std::string& path);
  std::string to_json_text() const;
};

struct GroundTruthLedger {
  std::map<UserId, GroupId> group_of;
  std::vector<std::uint64_t> group_sizes;  // indexed by group id
  std::vector<RelationshipTierRecord> tiers;
  std::map<GroupId, GeoPoint> home_cell;
  std::uint64_t event_count = 0;

  std::string to_json_text() const;
};

struct GeneratedTrace {
  Trace trace;  // events sorted by canonical order
  GroundTruthLedger ledger;
};

// Sizes drawn i.i.d. via the continuous-approximation inverse transform
//   size = floor(xmin * (1 - u)^(-1 / (alpha - 1))).
// Tail values are clamped at kMaxGroupSize.
inline constexpr std::uint64_t kMaxGroupSize = 2'000'000;
std::vector<std::uint64_t> sample_powerlaw_sizes(std::size_t n, double alpha,
                                                 std::uint64_t xmin, Rng& rng);

GeneratedTrace generate_trace(const GeneratorConfig& config, unsigned threads = 1);

}  // namespace d2d
