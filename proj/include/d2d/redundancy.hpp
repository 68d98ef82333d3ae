#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2d/types.hpp"

namespace d2d {

struct RedundancyRow {
  Timestamp window_start_ts = 0;
  Category category = Category::other;
  std::uint64_t total_bytes = 0;
  std::uint64_t redundant_bytes = 0;
  double redundant_ratio = 0.0;  // redundant / total, 0 when total == 0
  std::uint64_t deliveries = 0;
  std::uint64_t distinct_files = 0;
};

struct RedundancyReport {
  Timestamp window_seconds = 0;
  std::vector<RedundancyRow> rows;  // ordered by (window_start_ts, category)
};

// Redundancy is global per file across the whole trace: deliveries of each
// file are ordered by (ts, sender, receiver); the first is non-redundant and
// every later delivery of the same file counts as redundant bytes. Bytes are
// attributed to the epoch-aligned window containing the delivery timestamp.
RedundancyReport redundancy_timeseries(const std::vector<SharingEvent>& events,
                                       Timestamp window_seconds);

struct CategoryRedundancy {
  Category category;
  double redundant_ratio;      // overall across windows
  std::uint64_t total_bytes;
  std::uint64_t redundant_bytes;
};

// Categories sorted by descending overall ratio, ties broken by name.
std::vector<CategoryRedundancy> category_redundancy_ranking(const RedundancyReport& report);

std::string redundancy_to_csv(const RedundancyReport& report);

}  // namespace d2d
