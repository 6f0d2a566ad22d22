#include "lifemine/core.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lifemine/csv.hpp"

namespace lifemine {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    default: return "unknown";
  }
}

std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  if (s == "unknown" || s.empty()) return Gender::unknown;
  return std::nullopt;
}

bool ValidationReport::has(std::string_view kind, std::string_view id) const {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) {
    return i.kind == kind && i.id == id;
  });
}

void IngestReport::merge(const IngestReport& other) {
  total_rows += other.total_rows;
  accepted += other.accepted;
  rejects.insert(rejects.end(), other.rejects.begin(), other.rejects.end());
}

const Venue* Dataset::find_venue(const std::string& id) const {
  auto it = venue_index_.find(id);
  return it == venue_index_.end() ? nullptr : &venues[it->second];
}

const UserProfile* Dataset::find_user(const std::string& id) const {
  auto it = user_index_.find(id);
  return it == user_index_.end() ? nullptr : &users[it->second];
}

void Dataset::rebuild_indices() {
  venue_index_.clear();
  user_index_.clear();
  for (std::size_t i = 0; i < venues.size(); ++i)
    venue_index_.emplace(venues[i].venue_id, i);  // first occurrence wins
  for (std::size_t i = 0; i < users.size(); ++i)
    user_index_.emplace(users[i].user_id, i);
}

void Dataset::register_missing_users() {
  rebuild_indices();
  for (const auto& c : checkins) {
    if (!find_user(c.user_id)) {
      users.push_back({c.user_id, "unknown", Gender::unknown});
      user_index_.emplace(c.user_id, users.size() - 1);
    }
  }
}

namespace {

std::vector<std::string> split_categories(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '|') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  // drop duplicates, keep first-seen order
  std::vector<std::string> uniq;
  for (auto& c : out)
    if (std::find(uniq.begin(), uniq.end(), c) == uniq.end())
      uniq.push_back(std::move(c));
  return uniq;
}

std::string join_categories(const std::vector<std::string>& cats) {
  std::string out;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (i) out.push_back('|');
    out += cats[i];
  }
  return out;
}

bool valid_lat(double v) { return v >= -90.0 && v <= 90.0; }
bool valid_lon(double v) { return v >= -180.0 && v <= 180.0; }

// Field accessors shared by the CSV and JSONL row decoders. Each returns
// false with a reason on schema violation.
struct RowError {
  std::string reason;
};

std::optional<CheckIn> decode_checkin(const std::string& user_id,
                                      const std::string& ts,
                                      const std::string& lat,
                                      const std::string& lon,
                                      const std::string& venue_id,
                                      std::vector<std::string> cats,
                                      RowError& err) {
  if (user_id.empty()) {
    err.reason = "empty user_id";
    return std::nullopt;
  }
  auto t = CivilDateTime::parse(ts);
  if (!t) {
    err.reason = "bad timestamp '" + ts + "'";
    return std::nullopt;
  }
  auto la = csv::parse_double(lat);
  auto lo = csv::parse_double(lon);
  if (!la || !valid_lat(*la)) {
    err.reason = "lat out of range '" + lat + "'";
    return std::nullopt;
  }
  if (!lo || !valid_lon(*lo)) {
    err.reason = "lon out of range '" + lon + "'";
    return std::nullopt;
  }
  CheckIn c;
  c.user_id = user_id;
  c.timestamp = *t;
  c.lat = *la;
  c.lon = *lo;
  c.venue_id = venue_id;
  c.categories = std::move(cats);
  return c;
}

std::vector<std::string> json_categories(const json& j, bool& ok) {
  ok = true;
  if (!j.contains("categories") || j["categories"].is_null()) return {};
  const auto& v = j["categories"];
  if (v.is_string()) return split_categories(v.get<std::string>());
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) {
        ok = false;
        return {};
      }
      out.push_back(e.get<std::string>());
    }
    return split_categories(join_categories(out));
  }
  ok = false;
  return {};
}

std::string json_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return "";
  if (j[key].is_string()) return j[key].get<std::string>();
  throw RowError{std::string(key) + " is not a string"};
}

std::string json_number_as_string(const json& j, const char* key) {
  if (!j.contains(key)) return "";
  if (j[key].is_number()) return csv::format_double(j[key].get<double>());
  if (j[key].is_string()) return j[key].get<std::string>();
  throw RowError{std::string(key) + " is not a number"};
}

// Per-line driver: calls `handle(fields...)` for every row and records
// rejects. CSV streams may start with the canonical header row.
template <typename Fn>
void for_each_row(std::istream& in, StreamFormat format,
                  const std::string& header_first_col, IngestReport& report,
                  Fn&& handle) {
  std::string line;
  std::uint64_t line_no = 0;
  bool first = true;
  while (csv::getline_norm(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (format == StreamFormat::csv) {
      auto fields = csv::split_record(line);
      if (first && !fields.empty() && fields[0] == header_first_col) {
        first = false;
        continue;  // header row, not a data row
      }
      first = false;
      ++report.total_rows;
      RowError err;
      if (handle(fields, nullptr, err)) {
        ++report.accepted;
      } else {
        report.rejects.push_back({line_no, err.reason});
      }
    } else {
      first = false;
      ++report.total_rows;
      RowError err;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        report.rejects.push_back({line_no, "malformed JSON object"});
        continue;
      }
      if (handle(std::vector<std::string>{}, &j, err)) {
        ++report.accepted;
      } else {
        report.rejects.push_back({line_no, err.reason});
      }
    }
  }
}

}  // namespace

Dataset ingest_checkins(std::istream& in, StreamFormat format,
                        IngestReport& report) {
  Dataset ds;
  for_each_row(
      in, format, "user_id", report,
      [&](const std::vector<std::string>& f, const json* j, RowError& err) {
        std::optional<CheckIn> c;
        if (j) {
          try {
            bool ok = true;
            auto cats = json_categories(*j, ok);
            if (!ok) {
              err.reason = "bad categories field";
              return false;
            }
            c = decode_checkin(json_string(*j, "user_id"),
                               json_string(*j, "timestamp"),
                               json_number_as_string(*j, "lat"),
                               json_number_as_string(*j, "lon"),
                               json_string(*j, "venue_id"), std::move(cats),
                               err);
          } catch (const RowError& e) {
            err.reason = e.reason;
            return false;
          }
        } else {
          if (f.size() != 6) {
            err.reason = "expected 6 columns, got " + std::to_string(f.size());
            return false;
          }
          c = decode_checkin(f[0], f[1], f[2], f[3], f[4],
                             split_categories(f[5]), err);
        }
        if (!c) return false;
        ds.checkins.push_back(std::move(*c));
        return true;
      });
  ds.register_missing_users();
  return ds;
}

void ingest_venues(std::istream& in, StreamFormat format, Dataset& ds,
                   IngestReport& report) {
  for_each_row(
      in, format, "venue_id", report,
      [&](const std::vector<std::string>& f, const json* j, RowError& err) {
        std::string id, lat, lon;
        std::vector<std::string> cats;
        if (j) {
          try {
            bool ok = true;
            cats = json_categories(*j, ok);
            if (!ok) {
              err.reason = "bad categories field";
              return false;
            }
            id = json_string(*j, "venue_id");
            lat = json_number_as_string(*j, "lat");
            lon = json_number_as_string(*j, "lon");
          } catch (const RowError& e) {
            err.reason = e.reason;
            return false;
          }
        } else {
          if (f.size() != 4) {
            err.reason = "expected 4 columns, got " + std::to_string(f.size());
            return false;
          }
          id = f[0];
          lat = f[1];
          lon = f[2];
          cats = split_categories(f[3]);
        }
        if (id.empty()) {
          err.reason = "empty venue_id";
          return false;
        }
        auto la = csv::parse_double(lat);
        auto lo = csv::parse_double(lon);
        if (!la || !valid_lat(*la)) {
          err.reason = "lat out of range '" + lat + "'";
          return false;
        }
        if (!lo || !valid_lon(*lo)) {
          err.reason = "lon out of range '" + lon + "'";
          return false;
        }
        ds.venues.push_back({id, *la, *lo, std::move(cats)});
        return true;
      });
  ds.rebuild_indices();
}

void ingest_users(std::istream& in, StreamFormat format, Dataset& ds,
                  IngestReport& report) {
  std::set<std::string> seen_ids;
  for (const auto& u : ds.users) seen_ids.insert(u.user_id);
  for_each_row(
      in, format, "user_id", report,
      [&](const std::vector<std::string>& f, const json* j, RowError& err) {
        std::string id, city, gender;
        if (j) {
          try {
            id = json_string(*j, "user_id");
            city = json_string(*j, "city");
            gender = json_string(*j, "gender");
          } catch (const RowError& e) {
            err.reason = e.reason;
            return false;
          }
        } else {
          if (f.size() != 3) {
            err.reason = "expected 3 columns, got " + std::to_string(f.size());
            return false;
          }
          id = f[0];
          city = f[1];
          gender = f[2];
        }
        if (id.empty()) {
          err.reason = "empty user_id";
          return false;
        }
        auto g = parse_gender(gender);
        if (!g) {
          err.reason = "bad gender '" + gender + "'";
          return false;
        }
        if (!seen_ids.insert(id).second) {
          err.reason = "duplicate user_id '" + id + "'";
          return false;
        }
        ds.users.push_back({id, city.empty() ? "unknown" : city, *g});
        return true;
      });
  ds.rebuild_indices();
}

ValidationReport validate_dataset(const Dataset& ds) {
  ValidationReport rep;
  std::map<std::string, int> venue_count;
  for (const auto& v : ds.venues) {
    if (++venue_count[v.venue_id] == 2)
      rep.issues.push_back({"duplicate_venue", v.venue_id});
    if (v.categories.empty())
      rep.issues.push_back({"empty_categories", v.venue_id});
  }
  std::vector<std::string> seen;
  for (const auto& c : ds.checkins) {
    if (c.has_venue() && !ds.find_venue(c.venue_id)) {
      if (std::find(seen.begin(), seen.end(), c.venue_id) == seen.end()) {
        rep.issues.push_back({"dangling_venue", c.venue_id});
        seen.push_back(c.venue_id);
      }
    }
  }
  return rep;
}

std::string checkin_csv_header() {
  return "user_id,timestamp,lat,lon,venue_id,categories";
}

std::string checkin_to_csv(const CheckIn& c) {
  return csv::join_record({c.user_id, c.timestamp.to_string(),
                           csv::format_double(c.lat), csv::format_double(c.lon),
                           c.venue_id, join_categories(c.categories)});
}

namespace {

std::optional<fs::path> pick_input(const fs::path& dir, const char* stem,
                                   StreamFormat& fmt) {
  fs::path csv_p = dir / (std::string(stem) + ".csv");
  fs::path jsonl_p = dir / (std::string(stem) + ".jsonl");
  if (fs::exists(csv_p)) {
    fmt = StreamFormat::csv;
    return csv_p;
  }
  if (fs::exists(jsonl_p)) {
    fmt = StreamFormat::jsonl;
    return jsonl_p;
  }
  return std::nullopt;
}

}  // namespace

Dataset load_dataset_dir(const std::string& dir, IngestReport& report) {
  fs::path d(dir);
  if (!fs::is_directory(d))
    throw std::runtime_error("dataset directory not found: " + dir);
  StreamFormat fmt;
  auto ck = pick_input(d, "checkins", fmt);
  if (!ck) throw std::runtime_error("no checkins.csv/.jsonl in " + dir);
  std::ifstream cin_s(*ck);
  if (!cin_s) throw std::runtime_error("unreadable stream: " + ck->string());
  Dataset ds = ingest_checkins(cin_s, fmt, report);

  if (auto vp = pick_input(d, "venues", fmt)) {
    std::ifstream vs(*vp);
    if (!vs) throw std::runtime_error("unreadable stream: " + vp->string());
    ingest_venues(vs, fmt, ds, report);
  }
  if (auto up = pick_input(d, "users", fmt)) {
    std::ifstream us(*up);
    if (!us) throw std::runtime_error("unreadable stream: " + up->string());
    // Profiles read after check-ins replace the auto-registered stubs.
    Dataset fresh;
    fresh.checkins = std::move(ds.checkins);
    fresh.venues = std::move(ds.venues);
    fresh.provenance = ds.provenance;
    ingest_users(us, fmt, fresh, report);
    ds = std::move(fresh);
  }
  if (fs::exists(d / "meta.json")) {
    std::ifstream ms(d / "meta.json");
    json meta = json::parse(ms, nullptr, false);
    if (!meta.is_discarded() && meta.contains("provenance"))
      ds.provenance = meta["provenance"].get<std::string>();
  }
  ds.register_missing_users();
  ds.rebuild_indices();
  return ds;
}

void write_dataset_dir(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "checkins.csv");
    out << checkin_csv_header() << "\n";
    for (const auto& c : ds.checkins) out << checkin_to_csv(c) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "venues.csv");
    out << "venue_id,lat,lon,categories\n";
    for (const auto& v : ds.venues)
      out << csv::join_record({v.venue_id, csv::format_double(v.lat),
                               csv::format_double(v.lon),
                               join_categories(v.categories)})
          << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "users.csv");
    out << "user_id,city,gender\n";
    for (const auto& u : ds.users)
      out << csv::join_record({u.user_id, u.city, to_string(u.gender)}) << "\n";
  }
  {
    json meta;
    meta["provenance"] = ds.provenance;
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << "\n";
  }
}

}  // namespace lifemine
