#include "d2d/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace d2d {

namespace {

constexpr std::string_view kHeaderPrefix = "#d2dtrace v1 ";

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  // std::from_chars for double is missing on some toolchains; strtod is fine
  // here because fields are comma-separated and already isolated.
  std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

std::string_view category_name(Category c) {
  switch (c) {
    case Category::app: return "app";
    case Category::video: return "video";
    case Category::music: return "music";
    case Category::image: return "image";
    case Category::other: return "other";
  }
  return "other";
}

std::optional<Category> category_from_name(std::string_view name) {
  if (name == "app") return Category::app;
  if (name == "video") return Category::video;
  if (name == "music") return Category::music;
  if (name == "image") return Category::image;
  if (name == "other") return Category::other;
  return std::nullopt;
}

std::string_view tier_name(Tier t) {
  switch (t) {
    case Tier::stranger: return "stranger";
    case Tier::friend_tier: return "friend";
    case Tier::family: return "family";
  }
  return "stranger";
}

std::optional<Tier> tier_from_name(std::string_view name) {
  if (name == "stranger") return Tier::stranger;
  if (name == "friend") return Tier::friend_tier;
  if (name == "family") return Tier::family;
  return std::nullopt;
}

bool event_less(const SharingEvent& a, const SharingEvent& b) {
  if (a.ts != b.ts) return a.ts < b.ts;
  if (a.sender != b.sender) return a.sender < b.sender;
  if (a.receiver != b.receiver) return a.receiver < b.receiver;
  if (a.file != b.file) return a.file < b.file;
  if (a.size_bytes != b.size_bytes) return a.size_bytes < b.size_bytes;
  return static_cast<int>(a.category) < static_cast<int>(b.category);
}

ParseResult parse_event_log(std::istream& in, bool strict) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& reason) {
    result.errors.push_back(LineError{line_no, reason});
  };

  if (!std::getline(in, line)) {
    result.errors.push_back(LineError{0, "empty input: missing header line"});
    return result;
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  bool header_ok = false;
  if (line.rfind(kHeaderPrefix, 0) == 0) {
    std::string_view rest = std::string_view(line).substr(kHeaderPrefix.size());
    auto parts = split_fields(rest, ' ');
    if (parts.size() == 2 && parts[0].rfind("min_ts=", 0) == 0 &&
        parts[1].rfind("max_ts=", 0) == 0) {
      header_ok = parse_i64(parts[0].substr(7), result.trace.min_ts) &&
                  parse_i64(parts[1].substr(7), result.trace.max_ts) &&
                  result.trace.min_ts <= result.trace.max_ts;
    }
  }
  if (!header_ok) {
    fail("bad header: expected '#d2dtrace v1 min_ts=<int> max_ts=<int>'");
    return result;
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    auto fields = split_fields(line, ',');
    if (fields.size() != 7) {
      fail("bad field count: expected 7, got " + std::to_string(fields.size()));
      if (strict) return result;
      continue;
    }

    SharingEvent ev;
    if (!parse_i64(fields[0], ev.ts) || !parse_u64(fields[1], ev.sender) ||
        !parse_u64(fields[2], ev.receiver) || !parse_u64(fields[3], ev.file) ||
        !parse_u64(fields[4], ev.size_bytes)) {
      fail("unparsable integer field");
      if (strict) return result;
      continue;
    }
    if (ev.sender == ev.receiver) {
      fail("sender == receiver");
      if (strict) return result;
      continue;
    }
    if (ev.ts < result.trace.min_ts || ev.ts > result.trace.max_ts) {
      fail("timestamp outside declared span");
      if (strict) return result;
      continue;
    }
    const auto cat = category_from_name(fields[5]);
    if (!cat) {
      fail("unknown category '" + std::string(fields[5]) + "'");
      if (strict) return result;
      continue;
    }
    ev.category = *cat;
    if (!fields[6].empty()) {
      auto geo_fields = split_fields(fields[6], ';');
      GeoPoint g;
      if (geo_fields.size() != 2 || !parse_double(geo_fields[0], g.lat) ||
          !parse_double(geo_fields[1], g.lon)) {
        fail("bad geo field");
        if (strict) return result;
        continue;
      }
      if (!g.valid()) {
        fail("out-of-range coordinate");
        if (strict) return result;
        continue;
      }
      ev.geo = g;
    }
    result.trace.events.push_back(ev);
  }
  return result;
}

ParseResult parse_event_log_file(const std::string& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trace file: " + path);
  return parse_event_log(in, strict);
}

std::string format_event(const SharingEvent& ev) {
  char buf[160];
  int n = std::snprintf(buf, sizeof buf, "%lld,%llu,%llu,%llu,%llu,%s,",
                        static_cast<long long>(ev.ts),
                        static_cast<unsigned long long>(ev.sender),
                        static_cast<unsigned long long>(ev.receiver),
                        static_cast<unsigned long long>(ev.file),
                        static_cast<unsigned long long>(ev.size_bytes),
                        std::string(category_name(ev.category)).c_str());
  std::string out(buf, static_cast<std::size_t>(n));
  if (ev.geo) {
    std::snprintf(buf, sizeof buf, "%.6f;%.6f", ev.geo->lat, ev.geo->lon);
    out += buf;
  }
  return out;
}

void write_event_log(std::ostream& out, const Trace& trace) {
  out << "#d2dtrace v1 min_ts=" << trace.min_ts << " max_ts=" << trace.max_ts << '\n';
  for (const auto& ev : trace.events) out << format_event(ev) << '\n';
}

void write_event_log_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open output file: " + path);
  write_event_log(out, trace);
  out.flush();
  if (!out) throw InputError("write failed: " + path);
}

TraceSummary summarize(const std::vector<SharingEvent>& events) {
  TraceSummary s;
  std::unordered_set<UserId> users;
  std::unordered_set<ContentId> files;
  bool first = true;
  for (const auto& ev : events) {
    ++s.num_events;
    users.insert(ev.sender);
    users.insert(ev.receiver);
    files.insert(ev.file);
    if (ev.geo) ++s.num_gps_records;
    auto& cs = s.per_category[ev.category];
    ++cs.events;
    cs.bytes += ev.size_bytes;
    if (first) {
      s.min_ts = s.max_ts = ev.ts;
      first = false;
    } else {
      s.min_ts = std::min(s.min_ts, ev.ts);
      s.max_ts = std::max(s.max_ts, ev.ts);
    }
  }
  s.num_users = users.size();
  s.num_files = files.size();
  return s;
}

std::string summary_to_json(const TraceSummary& s) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"num_events\": " << s.num_events << ",\n";
  out << "  \"num_users\": " << s.num_users << ",\n";
  out << "  \"num_files\": " << s.num_files << ",\n";
  out << "  \"num_gps_records\": " << s.num_gps_records << ",\n";
  out << "  \"time_span\": {\"min_ts\": " << s.min_ts << ", \"max_ts\": " << s.max_ts
      << "},\n";
  out << "  \"per_category\": {";
  bool first = true;
  for (const auto& [cat, cs] : s.per_category) {
    if (!first) out << ",";
    first = false;
    out << "\n    \"" << category_name(cat) << "\": {\"events\": " << cs.events
        << ", \"bytes\": " << cs.bytes << "}";
  }
  if (!first) out << "\n  ";
  out << "}\n}\n";
  return out.str();
}

namespace {

void sort_events_if_needed(std::vector<SharingEvent>& events) {
  if (!std::is_sorted(events.begin(), events.end(),
                      [](const SharingEvent& a, const SharingEvent& b) { return a.ts < b.ts; })) {
    std::stable_sort(events.begin(), events.end(), event_less);
  }
}

}  // namespace

SplitResult split_at(std::vector<SharingEvent> events, Timestamp boundary) {
  sort_events_if_needed(events);
  SplitResult r;
  r.boundary = boundary;
  const auto mid = std::partition_point(
      events.begin(), events.end(),
      [boundary](const SharingEvent& ev) { return ev.ts < boundary; });
  r.first.assign(events.begin(), mid);
  r.second.assign(mid, events.end());
  return r;
}

SplitResult split_by_fraction(std::vector<SharingEvent> events, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InputError("split fraction must be in (0,1)");
  }
  if (events.empty()) return SplitResult{};
  sort_events_if_needed(events);
  const Timestamp lo = events.front().ts;
  const Timestamp hi = events.back().ts;
  const Timestamp boundary =
      lo + static_cast<Timestamp>(fraction * static_cast<double>(hi - lo));
  return split_at(std::move(events), boundary);
}

void RelationshipIndex::set(UserId u, UserId v, Tier tier) {
  if (u == v) throw InputError("relationship pair must have distinct users");
  tiers_[UserPair(u, v)] = tier;
}

Tier RelationshipIndex::tier_of(UserId u, UserId v) const {
  const auto it = tiers_.find(UserPair(u, v));
  return it == tiers_.end() ? Tier::stranger : it->second;
}

RelationshipIndex RelationshipIndex::load(std::istream& in) {
  RelationshipIndex idx;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line, ',');
    std::uint64_t a = 0, b = 0, t = 0;
    if (fields.size() != 3 || !parse_u64(fields[0], a) || !parse_u64(fields[1], b) ||
        !parse_u64(fields[2], t) || t > 2 || a == b) {
      throw InputError("bad relationship record at line " + std::to_string(line_no));
    }
    idx.set(a, b, static_cast<Tier>(t));
  }
  return idx;
}

RelationshipIndex RelationshipIndex::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open relationship file: " + path);
  return load(in);
}

void RelationshipIndex::save(std::ostream& out) const {
  std::vector<std::pair<UserPair, Tier>> rows(tiers_.begin(), tiers_.end());
  std::sort(rows.begin(), rows.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [pair, tier] : rows) {
    out << pair.a << ',' << pair.b << ',' << static_cast<int>(tier) << '\n';
  }
}

void RelationshipIndex::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open output file: " + path);
  save(out);
}

}  // namespace d2d
