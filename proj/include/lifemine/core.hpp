#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifemine/time.hpp"

namespace lifemine {

enum class Gender { male, female, unknown };

std::string to_string(Gender g);
std::optional<Gender> parse_gender(std::string_view s);

// One geo-tagged event. venue_id and categories are empty until the event is
// tied to a venue, either in the source data or by check-in extension.
struct CheckIn {
  std::string user_id;
  CivilDateTime timestamp;
  double lat = 0.0;
  double lon = 0.0;
  std::string venue_id;                 // empty = venue-less
  std::vector<std::string> categories;  // ordered, unique

  bool has_venue() const { return !venue_id.empty(); }
  bool operator==(const CheckIn&) const = default;
};

// A point of interest. A venue can carry several categories, one of which may
// subsume another ("American Restaurant" next to "Restaurant").
struct Venue {
  std::string venue_id;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<std::string> categories;

  bool operator==(const Venue&) const = default;
};

struct UserProfile {
  std::string user_id;
  std::string city = "unknown";
  Gender gender = Gender::unknown;

  bool operator==(const UserProfile&) const = default;
};

struct ValidationIssue {
  std::string kind;  // dangling_venue | duplicate_venue | empty_categories
  std::string id;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  bool has(std::string_view kind, std::string_view id) const;
};

struct RowReject {
  std::uint64_t line = 0;  // 1-based line number in the source stream
  std::string reason;
};

struct IngestReport {
  std::uint64_t total_rows = 0;  // data rows seen (header excluded)
  std::uint64_t accepted = 0;
  std::vector<RowReject> rejects;

  std::uint64_t rejected() const { return rejects.size(); }
  void merge(const IngestReport& other);
};

// Immutable after construction; safe to share read-only across threads.
struct Dataset {
  std::vector<CheckIn> checkins;
  std::vector<Venue> venues;
  std::vector<UserProfile> users;
  std::string provenance;

  // First occurrence wins when venue ids collide; duplicates stay in
  // `venues` so validation can report them.
  const Venue* find_venue(const std::string& id) const;
  const UserProfile* find_user(const std::string& id) const;

  // Registers any check-in user missing from `users` with city "unknown".
  void register_missing_users();

  void rebuild_indices();

  bool operator==(const Dataset& other) const {
    return checkins == other.checkins && venues == other.venues &&
           users == other.users && provenance == other.provenance;
  }

 private:
  std::map<std::string, std::size_t> venue_index_;
  std::map<std::string, std::size_t> user_index_;
};

enum class StreamFormat { csv, jsonl };

// Schemas (CSV columns / JSONL field names):
//   check-ins: user_id,timestamp,lat,lon,venue_id,categories
//   venues:    venue_id,lat,lon,categories
//   users:     user_id,city,gender
// Timestamps are ISO-8601 without offset (YYYY-MM-DDTHH:MM); categories are
// |-separated in CSV and either an array or a |-separated string in JSONL.
// Rows failing validation are rejected with their line number; the stream is
// never silently truncated.
Dataset ingest_checkins(std::istream& in, StreamFormat format,
                        IngestReport& report);
void ingest_venues(std::istream& in, StreamFormat format, Dataset& ds,
                   IngestReport& report);
void ingest_users(std::istream& in, StreamFormat format, Dataset& ds,
                  IngestReport& report);

ValidationReport validate_dataset(const Dataset& ds);

// Dataset directory layout: checkins.csv, venues.csv, users.csv, meta.json.
// JSONL variants (*.jsonl) are accepted on input. Missing venue/user files are
// fine; check-in users are then auto-registered.
Dataset load_dataset_dir(const std::string& dir, IngestReport& report);
void write_dataset_dir(const Dataset& ds, const std::string& dir);

std::string checkin_csv_header();
std::string checkin_to_csv(const CheckIn& c);

}  // namespace lifemine
