#include "d2d/redundancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace d2d {

namespace {

Timestamp window_start(Timestamp ts, Timestamp window) {
  // Epoch-aligned floor that also handles negative timestamps.
  Timestamp w = ts / window;
  if (ts % window != 0 && ts < 0) --w;
  return w * window;
}

// Identity of a file's first delivery: ordered by timestamp with a full
// deterministic tie-break so the report is invariant under input order.
struct FirstDelivery {
  Timestamp ts;
  UserId sender;
  UserId receiver;
  std::uint64_t size_bytes;
  std::uint8_t category;
  bool consumed = false;  // guards exact duplicate events

  friend bool operator<(const FirstDelivery& x, const FirstDelivery& y) {
    return std::tie(x.ts, x.sender, x.receiver, x.size_bytes, x.category) <
           std::tie(y.ts, y.sender, y.receiver, y.size_bytes, y.category);
  }
  bool matches(const SharingEvent& ev) const {
    return ts == ev.ts && sender == ev.sender && receiver == ev.receiver &&
           size_bytes == ev.size_bytes && category == static_cast<std::uint8_t>(ev.category);
  }
};

}  // namespace

RedundancyReport redundancy_timeseries(const std::vector<SharingEvent>& events,
                                       Timestamp window_seconds) {
  if (window_seconds <= 0) throw InputError("window_seconds must be positive");

  // Pass 1: the first delivery of each file under (ts, sender, receiver) order.
  std::unordered_map<ContentId, FirstDelivery> first;
  first.reserve(events.size());
  for (const auto& ev : events) {
    const FirstDelivery cand{ev.ts, ev.sender, ev.receiver, ev.size_bytes,
                             static_cast<std::uint8_t>(ev.category)};
    auto [it, inserted] = first.try_emplace(ev.file, cand);
    if (!inserted && cand < it->second) it->second = cand;
  }

  // Pass 2: windowed accumulation.
  struct Cell {
    std::uint64_t total_bytes = 0;
    std::uint64_t redundant_bytes = 0;
    std::uint64_t deliveries = 0;
    std::set<ContentId> files;
  };
  std::map<std::pair<Timestamp, int>, Cell> cells;
  for (const auto& ev : events) {
    const auto key = std::make_pair(window_start(ev.ts, window_seconds),
                                    static_cast<int>(ev.category));
    auto& cell = cells[key];
    cell.total_bytes += ev.size_bytes;
    ++cell.deliveries;
    cell.files.insert(ev.file);
    auto& fd = first.at(ev.file);
    if (!fd.consumed && fd.matches(ev)) {
      fd.consumed = true;  // non-redundant
    } else {
      cell.redundant_bytes += ev.size_bytes;
    }
  }

  RedundancyReport report;
  report.window_seconds = window_seconds;
  report.rows.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    RedundancyRow row;
    row.window_start_ts = key.first;
    row.category = static_cast<Category>(key.second);
    row.total_bytes = cell.total_bytes;
    row.redundant_bytes = cell.redundant_bytes;
    row.redundant_ratio =
        cell.total_bytes == 0
            ? 0.0
            : static_cast<double>(cell.redundant_bytes) / static_cast<double>(cell.total_bytes);
    row.deliveries = cell.deliveries;
    row.distinct_files = cell.files.size();
    report.rows.push_back(row);
  }
  return report;
}

std::vector<CategoryRedundancy> category_redundancy_ranking(const RedundancyReport& report) {
  std::map<Category, std::pair<std::uint64_t, std::uint64_t>> totals;  // total, redundant
  for (const auto& row : report.rows) {
    auto& [total, redundant] = totals[row.category];
    total += row.total_bytes;
    redundant += row.redundant_bytes;
  }
  std::vector<CategoryRedundancy> out;
  for (const auto& [cat, tr] : totals) {
    CategoryRedundancy cr;
    cr.category = cat;
    cr.total_bytes = tr.first;
    cr.redundant_bytes = tr.second;
    cr.redundant_ratio =
        tr.first == 0 ? 0.0 : static_cast<double>(tr.second) / static_cast<double>(tr.first);
    out.push_back(cr);
  }
  std::sort(out.begin(), out.end(), [](const CategoryRedundancy& a, const CategoryRedundancy& b) {
    if (a.redundant_ratio != b.redundant_ratio) return a.redundant_ratio > b.redundant_ratio;
    return category_name(a.category) < category_name(b.category);
  });
  return out;
}

std::string redundancy_to_csv(const RedundancyReport& report) {
  std::ostringstream out;
  out << "window_start_ts,category,total_bytes,redundant_bytes,redundant_ratio,deliveries,"
         "distinct_files\n";
  char ratio[32];
  for (const auto& row : report.rows) {
    std::snprintf(ratio, sizeof ratio, "%.6f", row.redundant_ratio);
    out << row.window_start_ts << ',' << category_name(row.category) << ',' << row.total_bytes
        << ',' << row.redundant_bytes << ',' << ratio << ',' << row.deliveries << ','
        << row.distinct_files << '\n';
  }
  return out.str();
}

}  // namespace d2d
