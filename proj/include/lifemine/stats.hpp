#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifemine/core.hpp"

namespace lifemine {

// Visits divided by unique visitors; the average visits per visitor.
struct VisitStats {
  std::string venue_id;
  std::uint64_t visits = 0;
  std::uint64_t unique_visitors = 0;
  double visiting_frequency = 0.0;
};

struct BoxStats {
  std::string category;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::uint64_t n = 0;
};

enum class Bucketing { hour24, dow7, month12 };
enum class DayFilter { all, weekday, weekend };

// Per-bucket share of each selected category. Shares are fractions of the
// bucket's category contributions (a check-in with c categories contributes
// c times), so the listed categories sum to <= 1 and the remainder is
// "other".
struct ShareSeries {
  Bucketing bucketing = Bucketing::hour24;
  std::vector<std::string> bucket_labels;
  std::vector<std::string> categories;           // top-n, by total count desc
  std::vector<std::vector<double>> shares;       // [category][bucket]
  std::vector<double> bucket_totals;             // category contributions
};

// One record per venue with at least one check-in, ordered by venue_id.
std::vector<VisitStats> visiting_frequency(const Dataset& ds);

// Quartiles of visiting frequency per category; a venue contributes to each
// of its categories. Quantiles interpolate linearly between order statistics.
// Categories without any visited venue are omitted.
std::vector<BoxStats> category_box_stats(const std::vector<VisitStats>& stats,
                                         const Dataset& ds);

// Linearly interpolated quantile of a sorted sample, p in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double p);

// P(count >= v) for each distinct v ascending; non-increasing, starts at 1.
std::vector<std::pair<std::uint64_t, double>> ccdf(
    const std::vector<std::uint64_t>& counts);

struct ShareOptions {
  int top_n = 10;
  DayFilter day_filter = DayFilter::all;
  // Drops a candidate category when it and an already-selected one are
  // suffix-token duplicates of each other ("Restaurant" under "American
  // Restaurant").
  bool dedupe_subsumed = true;
};

ShareSeries share_series(const Dataset& ds, Bucketing bucketing,
                         const ShareOptions& opts);

// True when one name equals the other or ends with " " + the other.
bool is_suffix_token(const std::string& inner, const std::string& outer);

std::vector<std::string> bucket_labels(Bucketing b);
int bucket_count(Bucketing b);
int bucket_of(const CivilDateTime& t, Bucketing b);
bool passes_day_filter(const CivilDateTime& t, DayFilter f);

}  // namespace lifemine
