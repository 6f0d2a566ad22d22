#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lifemine/core.hpp"
#include "lifemine/csv.hpp"

using namespace lifemine;
namespace fs = std::filesystem;

namespace {

Dataset ingest_csv(const std::string& body, IngestReport& rep) {
  std::istringstream in(body);
  return ingest_checkins(in, StreamFormat::csv, rep);
}

const char* kThreeRows =
    "user_id,timestamp,lat,lon,venue_id,categories\n"
    "u1,2012-06-04T09:15,43.15,-77.60,v1,Bar\n"
    "u2,2012-06-04T10:00,43.16,-77.61,,\n"
    "u1,2012-06-05T21:30,43.14,-77.59,v2,Bar|Music Venue\n";

}  // namespace

TEST_CASE("csv record splitting handles quotes and trailing empties") {
  auto f = csv::split_record("a,\"b,c\",,");
  REQUIRE(f.size() == 4);
  CHECK(f[0] == "a");
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "");
  CHECK(f[3] == "");
  CHECK(csv::split_record("x").size() == 1);
  CHECK(csv::join_record({"a", "b,c", ""}) == "a,\"b,c\",");
}

TEST_CASE("timestamps parse strictly") {
  auto t = CivilDateTime::parse("2012-06-04T09:15");
  REQUIRE(t.has_value());
  CHECK(t->day_of_week() == 0);  // Monday
  CHECK_FALSE(t->is_weekend());
  CHECK(t->to_string() == "2012-06-04T09:15");
  CHECK(CivilDateTime::parse("2012-06-09T00:30")->is_weekend());
  CHECK_FALSE(CivilDateTime::parse("2012-13-04T09:15").has_value());
  CHECK_FALSE(CivilDateTime::parse("2012-02-30T09:15").has_value());
  CHECK_FALSE(CivilDateTime::parse("2012-06-04 09:15").has_value());
  CHECK_FALSE(CivilDateTime::parse("2012-06-04T24:15").has_value());
  CHECK(CivilDateTime::parse("2012-02-29T00:00").has_value());  // leap year
}

TEST_CASE("three valid rows ingest cleanly") {
  IngestReport rep;
  Dataset ds = ingest_csv(kThreeRows, rep);
  CHECK(ds.checkins.size() == 3);
  CHECK(rep.total_rows == 3);
  CHECK(rep.rejected() == 0);
  CHECK(ds.checkins[2].categories ==
        std::vector<std::string>{"Bar", "Music Venue"});
  // users auto-registered with unknown demographics
  REQUIRE(ds.users.size() == 2);
  CHECK(ds.find_user("u1")->city == "unknown");
}

TEST_CASE("out-of-range latitude rejects the row") {
  IngestReport rep;
  Dataset ds = ingest_csv("u1,2012-06-04T09:15,95.0,-77.60,,\n", rep);
  CHECK(ds.checkins.empty());
  REQUIRE(rep.rejected() == 1);
  CHECK(rep.rejects[0].line == 1);
  CHECK(rep.accepted == 0);
}

TEST_CASE("mixed file: 100 rows with 7 malformed") {
  // Rows 7, 15, 30, 45, 60, 75, 90 are broken in assorted ways.
  std::string body = "user_id,timestamp,lat,lon,venue_id,categories\n";
  std::set<std::uint64_t> bad_lines;
  for (int i = 1; i <= 100; ++i) {
    bool bad = (i % 15 == 0) || i == 7;
    char buf[128];
    if (bad) {
      switch (i % 3) {
        case 0:
          std::snprintf(buf, sizeof(buf),
                        "u%03d,2012-06-04T09:15,91.5,-77.60,,", i);
          break;
        case 1:
          std::snprintf(buf, sizeof(buf), "u%03d,not-a-time,43.1,-77.60,,", i);
          break;
        default:
          std::snprintf(buf, sizeof(buf), "u%03d,2012-06-04T09:15,43.1", i);
      }
      bad_lines.insert(static_cast<std::uint64_t>(i) + 1);  // header is line 1
    } else {
      std::snprintf(buf, sizeof(buf),
                    "u%03d,2012-06-04T09:15,43.10,-77.60,v1,Bar", i);
    }
    body += buf;
    body += "\n";
  }
  REQUIRE(bad_lines.size() == 7);

  IngestReport rep;
  Dataset ds = ingest_csv(body, rep);
  CHECK(ds.checkins.size() == 93);
  CHECK(rep.total_rows == 100);
  CHECK(rep.accepted == 93);
  REQUIRE(rep.rejected() == 7);
  std::set<std::uint64_t> got;
  for (const auto& r : rep.rejects) got.insert(r.line);
  CHECK(got == bad_lines);
}

TEST_CASE("row count conservation on arbitrary input") {
  std::string body;
  for (int i = 0; i < 50; ++i)
    body += (i % 3 == 0) ? "garbage line\n"
                         : "u1,2012-06-04T09:15,43.10,-77.60,,\n";
  IngestReport rep;
  ingest_csv(body, rep);
  CHECK(rep.accepted + rep.rejected() == rep.total_rows);
}

TEST_CASE("jsonl ingestion with array and string categories") {
  std::string body =
      R"({"user_id":"u1","timestamp":"2012-06-04T09:15","lat":43.15,"lon":-77.6,"venue_id":"v1","categories":["Bar","Pub"]})"
      "\n"
      R"({"user_id":"u2","timestamp":"2012-06-04T10:00","lat":43.2,"lon":-77.6,"categories":"Bar|Pub"})"
      "\n"
      R"({"user_id":"u3","timestamp":"bad","lat":43.2,"lon":-77.6})"
      "\n";
  std::istringstream in(body);
  IngestReport rep;
  Dataset ds = ingest_checkins(in, StreamFormat::jsonl, rep);
  REQUIRE(ds.checkins.size() == 2);
  CHECK(ds.checkins[0].categories == std::vector<std::string>{"Bar", "Pub"});
  CHECK(ds.checkins[1].categories == std::vector<std::string>{"Bar", "Pub"});
  CHECK(rep.rejected() == 1);
  CHECK(rep.rejects[0].line == 3);
}

TEST_CASE("ingestion is idempotent") {
  IngestReport r1, r2;
  Dataset a = ingest_csv(kThreeRows, r1);
  Dataset b = ingest_csv(kThreeRows, r2);
  CHECK(a == b);
}

TEST_CASE("validation examples") {
  Dataset ds;
  SUBCASE("all references resolved -> empty report") {
    ds.venues.push_back({"v1", 43.0, -77.0, {"Bar"}});
    ds.checkins.push_back({"u1", *CivilDateTime::parse("2012-06-04T09:15"),
                           43.0, -77.0, "v1", {"Bar"}});
    ds.rebuild_indices();
    CHECK(validate_dataset(ds).empty());
  }
  SUBCASE("dangling venue reference") {
    ds.checkins.push_back({"u1", *CivilDateTime::parse("2012-06-04T09:15"),
                           43.0, -77.0, "v9", {}});
    ds.rebuild_indices();
    auto rep = validate_dataset(ds);
    CHECK(rep.has("dangling_venue", "v9"));
  }
  SUBCASE("duplicate venue ids") {
    ds.venues.push_back({"v1", 43.0, -77.0, {"Bar"}});
    ds.venues.push_back({"v1", 43.1, -77.1, {"Pub"}});
    ds.rebuild_indices();
    auto rep = validate_dataset(ds);
    CHECK(rep.has("duplicate_venue", "v1"));
  }
  SUBCASE("empty category set") {
    ds.venues.push_back({"v2", 43.0, -77.0, {}});
    ds.rebuild_indices();
    CHECK(validate_dataset(ds).has("empty_categories", "v2"));
  }
}

TEST_CASE("dataset directory round-trip") {
  fs::path dir = fs::temp_directory_path() / "lifemine_test_roundtrip";
  fs::remove_all(dir);

  Dataset ds;
  ds.provenance = "unit fixture";
  ds.venues.push_back({"v1", 43.05, -77.61, {"Bar", "Music Venue"}});
  ds.venues.push_back({"v2", 43.06, -77.62, {"Home (private)"}});
  ds.users.push_back({"u1", "lakeford", Gender::female});
  ds.users.push_back({"u2", "lakeford", Gender::unknown});
  ds.checkins.push_back({"u1", *CivilDateTime::parse("2012-06-04T09:15"),
                         43.05, -77.61, "v1", {"Bar", "Music Venue"}});
  ds.checkins.push_back({"u2", *CivilDateTime::parse("2012-06-09T23:45"),
                         43.061234, -77.625678, "", {}});
  ds.rebuild_indices();

  write_dataset_dir(ds, dir.string());
  IngestReport rep;
  Dataset back = load_dataset_dir(dir.string(), rep);
  CHECK(rep.rejected() == 0);
  CHECK(back == ds);

  // a second round-trip is byte-stable
  fs::path dir2 = fs::temp_directory_path() / "lifemine_test_roundtrip2";
  fs::remove_all(dir2);
  write_dataset_dir(back, dir2.string());
  for (const char* name : {"checkins.csv", "venues.csv", "users.csv"}) {
    std::ifstream a(dir / name), b(dir2 / name);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("dataset directories may use jsonl inputs") {
  fs::path dir = fs::temp_directory_path() / "lifemine_test_jsonl";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream ck(dir / "checkins.jsonl");
    ck << R"({"user_id":"u1","timestamp":"2012-06-04T09:15","lat":43.15,"lon":-77.6,"venue_id":"v1","categories":["Bar"]})"
       << "\n";
    std::ofstream vn(dir / "venues.jsonl");
    vn << R"({"venue_id":"v1","lat":43.15,"lon":-77.6,"categories":["Bar"]})"
       << "\n";
    std::ofstream us(dir / "users.jsonl");
    us << R"({"user_id":"u1","city":"lakeford","gender":"female"})" << "\n";
  }
  IngestReport rep;
  Dataset ds = load_dataset_dir(dir.string(), rep);
  CHECK(rep.rejected() == 0);
  REQUIRE(ds.checkins.size() == 1);
  CHECK(ds.checkins[0].venue_id == "v1");
  REQUIRE(ds.users.size() == 1);
  CHECK(ds.users[0].city == "lakeford");
  CHECK(ds.users[0].gender == Gender::female);
  CHECK(validate_dataset(ds).empty());
  fs::remove_all(dir);
}

TEST_CASE("duplicate check-ins are ingested verbatim") {
  std::string body =
      "u1,2012-06-04T09:15,43.10,-77.60,v1,Bar\n"
      "u1,2012-06-04T09:15,43.10,-77.60,v1,Bar\n";
  IngestReport rep;
  Dataset ds = ingest_csv(body, rep);
  CHECK(ds.checkins.size() == 2);
  CHECK(ds.checkins[0] == ds.checkins[1]);
}
