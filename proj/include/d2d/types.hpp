#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace d2d {

using UserId = std::uint64_t;
using ContentId = std::uint64_t;
using GroupId = std::uint64_t;
using Timestamp = std::int64_t;  // seconds since epoch, UTC

inline constexpr Timestamp kSecondsPerWeek = 604800;
inline constexpr Timestamp kSecondsPerDay = 86400;

enum class Category : std::uint8_t { app = 0, video, music, image, other };
inline constexpr int kNumCategories = 5;

std::string_view category_name(Category c);
std::optional<Category> category_from_name(std::string_view name);

enum class Tier : std::uint8_t { stranger = 0, friend_tier = 1, family = 2 };

std::string_view tier_name(Tier t);
std::optional<Tier> tier_from_name(std::string_view name);

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  bool valid() const { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// One timestamped D2D delivery of a content file between two users.
struct SharingEvent {
  Timestamp ts = 0;
  UserId sender = 0;
  UserId receiver = 0;
  ContentId file = 0;
  std::uint64_t size_bytes = 0;
  Category category = Category::other;
  std::optional<GeoPoint> geo;

  friend bool operator==(const SharingEvent&, const SharingEvent&) = default;
};

// Total order used for canonical sorting of event streams.
bool event_less(const SharingEvent& a, const SharingEvent& b);

// Unordered user pair stored canonically as (min, max).
struct UserPair {
  UserId a = 0;
  UserId b = 0;

  UserPair() = default;
  UserPair(UserId u, UserId v) : a(u < v ? u : v), b(u < v ? v : u) {}

  friend bool operator==(const UserPair&, const UserPair&) = default;
  friend auto operator<=>(const UserPair&, const UserPair&) = default;
};

struct UserPairHash {
  std::size_t operator()(const UserPair& p) const {
    std::uint64_t h = p.a * 0x9e3779b97f4a7c15ULL;
    h ^= p.b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// One relationship record; at most one per unordered pair.
struct RelationshipTierRecord {
  UserId user_a = 0;  // always < user_b
  UserId user_b = 0;
  Tier tier = Tier::stranger;

  friend bool operator==(const RelationshipTierRecord&, const RelationshipTierRecord&) = default;
};

// Input/format problems: bad files, malformed configs, violated preconditions
// attributable to caller-supplied data. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal invariants. The CLI maps these to exit code 3.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace d2d
