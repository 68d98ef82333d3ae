#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "d2d/types.hpp"

namespace d2d {

// A trace: declared time span plus the event list.
//
// File format (UTF-8, newline delimited):
//   #d2dtrace v1 min_ts=<int> max_ts=<int>
//   timestamp,sender,receiver,file,size_bytes,category,geo
// where geo is empty or "lat;lon" with 6 decimal places.
struct Trace {
  Timestamp min_ts = 0;
  Timestamp max_ts = 0;
  std::vector<SharingEvent> events;
};

struct LineError {
  std::size_t line_no = 0;  // 1-based, header is line 1
  std::string reason;
};

struct ParseResult {
  Trace trace;
  std::vector<LineError> errors;
};

// Parses an event log. Well-formed lines yield events in input order;
// malformed lines are reported as LineError. With strict=true parsing stops
// at the first malformed line (the error is still reported).
ParseResult parse_event_log(std::istream& in, bool strict);
ParseResult parse_event_log_file(const std::string& path, bool strict);

std::string format_event(const SharingEvent& ev);
void write_event_log(std::ostream& out, const Trace& trace);
void write_event_log_file(const std::string& path, const Trace& trace);

struct CategoryStats {
  std::uint64_t events = 0;
  std::uint64_t bytes = 0;
  friend bool operator==(const CategoryStats&, const CategoryStats&) = default;
};

struct TraceSummary {
  std::uint64_t num_events = 0;
  std::uint64_t num_users = 0;
  std::uint64_t num_files = 0;
  std::uint64_t num_gps_records = 0;
  Timestamp min_ts = 0;  // over events; 0 when empty
  Timestamp max_ts = 0;
  std::map<Category, CategoryStats> per_category;

  friend bool operator==(const TraceSummary&, const TraceSummary&) = default;
};

TraceSummary summarize(const std::vector<SharingEvent>& events);
std::string summary_to_json(const TraceSummary& s);

struct SplitResult {
  std::vector<SharingEvent> first;   // ts < boundary
  std::vector<SharingEvent> second;  // ts >= boundary
  Timestamp boundary = 0;
};

// Splits at an absolute boundary timestamp. Events are sorted by the
// canonical event order first if needed.
SplitResult split_at(std::vector<SharingEvent> events, Timestamp boundary);

// Fraction f in (0,1) maps to boundary = min_ts + f * (max_ts - min_ts)
// computed over the events themselves.
SplitResult split_by_fraction(std::vector<SharingEvent> events, double fraction);

// Relationship records: at most one tier per unordered user pair, default
// stranger for pairs without a record.
class RelationshipIndex {
 public:
  RelationshipIndex() = default;

  void set(UserId u, UserId v, Tier tier);
  Tier tier_of(UserId u, UserId v) const;
  bool allows(UserId u, UserId v, Tier threshold) const {
    return tier_of(u, v) >= threshold;
  }
  std::size_t size() const { return tiers_.size(); }

  // One record per line: "user_a,user_b,tier" with user_a < user_b, tier 0/1/2.
  static RelationshipIndex load(std::istream& in);
  static RelationshipIndex load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

 private:
  std::unordered_map<UserPair, Tier, UserPairHash> tiers_;
};

}  // namespace d2d
