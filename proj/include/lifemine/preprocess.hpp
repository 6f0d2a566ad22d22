#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifemine/core.hpp"

namespace lifemine {

enum class TieBreak { nearest_then_id };

struct ExtensionConfig {
  double radius_m = 30.0;   // "within" is inclusive: distance <= radius_m
  TieBreak tie_break = TieBreak::nearest_then_id;
  int min_span_days = 7;
  int min_checkins = 10;

  void validate() const;  // throws std::invalid_argument
};

// Great-circle distance on a sphere of radius 6,371,000 m.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Drops users whose activity span, floor((last - first) in whole days), is
// below min_span_days. A span of exactly min_span_days is kept.
Dataset filter_tourists(const Dataset& ds, int min_span_days);

// Drops users with fewer than min_checkins check-ins.
Dataset filter_low_activity(const Dataset& ds, int min_checkins);

// Assigns each venue-less check-in to the nearest venue within radius_m
// (ties by lexicographically smallest venue_id) and copies that venue's
// categories onto it. Check-ins already carrying a venue are untouched.
// Uses a lat/lon grid with cell edge ~ radius; results are identical to the
// all-pairs scan.
Dataset extend_checkins(const Dataset& ds, const ExtensionConfig& cfg);

// Nearest-venue lookup shared by extend_checkins and its tests.
// Returns index into `venues` or -1 when nothing lies within radius_m.
class VenueGrid {
 public:
  VenueGrid(const std::vector<Venue>& venues, double radius_m);

  std::ptrdiff_t nearest_within(double lat, double lon) const;

 private:
  const std::vector<Venue>& venues_;
  double radius_m_;
  bool brute_force_ = false;  // polar/antimeridian data falls back to a scan
  double cell_lat_deg_ = 1.0;
  double cell_lon_deg_ = 1.0;
  // cell key -> venue indices, keyed on (floor(lat/cell), floor(lon/cell))
  std::vector<std::pair<std::pair<std::int64_t, std::int64_t>,
                        std::vector<std::size_t>>>
      cells_;

  const std::vector<std::size_t>* find_cell(std::int64_t cy,
                                            std::int64_t cx) const;
  std::ptrdiff_t best_of(const std::vector<std::size_t>& candidates,
                         double lat, double lon, double& best_d,
                         std::ptrdiff_t best) const;
};

}  // namespace lifemine
