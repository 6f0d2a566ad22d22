#include "lifemine/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace lifemine {

namespace {

constexpr double kEarthRadiusM = 6'371'000.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr double kMetersPerDegLat = kEarthRadiusM * kDegToRad;

}  // namespace

void ExtensionConfig::validate() const {
  if (!(radius_m > 0.0))
    throw std::invalid_argument("radius_m must be > 0");
  if (min_span_days < 0)
    throw std::invalid_argument("min_span_days must be >= 0");
  if (min_checkins < 0)
    throw std::invalid_argument("min_checkins must be >= 0");
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kDegToRad;
  const double p2 = lat2 * kDegToRad;
  const double dp = (lat2 - lat1) * kDegToRad;
  const double dl = (lon2 - lon1) * kDegToRad;
  const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace {

Dataset keep_users(const Dataset& ds, const std::set<std::string>& keep) {
  Dataset out;
  out.provenance = ds.provenance;
  out.venues = ds.venues;
  for (const auto& c : ds.checkins)
    if (keep.count(c.user_id)) out.checkins.push_back(c);
  for (const auto& u : ds.users)
    if (keep.count(u.user_id)) out.users.push_back(u);
  out.rebuild_indices();
  return out;
}

}  // namespace

Dataset filter_tourists(const Dataset& ds, int min_span_days) {
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> span;
  for (const auto& c : ds.checkins) {
    std::int64_t m = c.timestamp.minutes_since_epoch();
    auto [it, fresh] = span.emplace(c.user_id, std::make_pair(m, m));
    if (!fresh) {
      it->second.first = std::min(it->second.first, m);
      it->second.second = std::max(it->second.second, m);
    }
  }
  std::set<std::string> keep;
  for (const auto& [uid, mm] : span) {
    std::int64_t whole_days = (mm.second - mm.first) / 1440;
    if (whole_days >= min_span_days) keep.insert(uid);
  }
  return keep_users(ds, keep);
}

Dataset filter_low_activity(const Dataset& ds, int min_checkins) {
  std::map<std::string, int> counts;
  for (const auto& c : ds.checkins) ++counts[c.user_id];
  std::set<std::string> keep;
  for (const auto& [uid, n] : counts)
    if (n >= min_checkins) keep.insert(uid);
  return keep_users(ds, keep);
}

VenueGrid::VenueGrid(const std::vector<Venue>& venues, double radius_m)
    : venues_(venues), radius_m_(radius_m) {
  if (venues_.empty()) {
    brute_force_ = true;
    return;
  }
  double max_abs_lat = 0.0;
  for (const auto& v : venues_)
    max_abs_lat = std::max(max_abs_lat, std::abs(v.lat));
  // Neighbor-cell probing is only exact while a degree of longitude spans
  // at least cell_lon_deg_ meters everywhere in the data; near the poles
  // that breaks down, so scan instead.
  if (max_abs_lat > 85.0) {
    brute_force_ = true;
    return;
  }
  cell_lat_deg_ = radius_m_ / kMetersPerDegLat;
  const double min_cos = std::cos((max_abs_lat + cell_lat_deg_) * kDegToRad);
  cell_lon_deg_ = radius_m_ / (kMetersPerDegLat * min_cos);

  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>>
      cells;
  for (std::size_t i = 0; i < venues_.size(); ++i) {
    std::int64_t cy = static_cast<std::int64_t>(
        std::floor(venues_[i].lat / cell_lat_deg_));
    std::int64_t cx = static_cast<std::int64_t>(
        std::floor(venues_[i].lon / cell_lon_deg_));
    cells[{cy, cx}].push_back(i);
  }
  cells_.assign(cells.begin(), cells.end());
}

const std::vector<std::size_t>* VenueGrid::find_cell(std::int64_t cy,
                                                     std::int64_t cx) const {
  auto key = std::make_pair(cy, cx);
  auto it = std::lower_bound(
      cells_.begin(), cells_.end(), key,
      [](const auto& e, const auto& k) { return e.first < k; });
  if (it == cells_.end() || it->first != key) return nullptr;
  return &it->second;
}

std::ptrdiff_t VenueGrid::best_of(const std::vector<std::size_t>& candidates,
                                  double lat, double lon, double& best_d,
                                  std::ptrdiff_t best) const {
  for (std::size_t i : candidates) {
    const auto& v = venues_[i];
    double d = haversine_m(lat, lon, v.lat, v.lon);
    if (d > radius_m_) continue;
    if (best < 0 || d < best_d ||
        (d == best_d && v.venue_id < venues_[best].venue_id)) {
      best = static_cast<std::ptrdiff_t>(i);
      best_d = d;
    }
  }
  return best;
}

std::ptrdiff_t VenueGrid::nearest_within(double lat, double lon) const {
  double best_d = 0.0;
  std::ptrdiff_t best = -1;
  if (brute_force_) {
    std::vector<std::size_t> all(venues_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return best_of(all, lat, lon, best_d, best);
  }
  // Probing one ring around a query whose longitude sits near +/-180 would
  // miss venues across the antimeridian; those queries get a full scan.
  if (std::abs(lon) > 180.0 - 2 * cell_lon_deg_ || std::abs(lat) > 85.0) {
    std::vector<std::size_t> all(venues_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return best_of(all, lat, lon, best_d, best);
  }
  std::int64_t cy = static_cast<std::int64_t>(std::floor(lat / cell_lat_deg_));
  std::int64_t cx = static_cast<std::int64_t>(std::floor(lon / cell_lon_deg_));
  for (std::int64_t dy = -1; dy <= 1; ++dy)
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      if (const auto* cell = find_cell(cy + dy, cx + dx))
        best = best_of(*cell, lat, lon, best_d, best);
  return best;
}

Dataset extend_checkins(const Dataset& ds, const ExtensionConfig& cfg) {
  cfg.validate();
  Dataset out = ds;
  VenueGrid grid(out.venues, cfg.radius_m);
  for (auto& c : out.checkins) {
    if (c.has_venue()) continue;
    std::ptrdiff_t idx = grid.nearest_within(c.lat, c.lon);
    if (idx < 0) continue;
    c.venue_id = out.venues[idx].venue_id;
    c.categories = out.venues[idx].categories;
  }
  out.rebuild_indices();
  return out;
}

}  // namespace lifemine
