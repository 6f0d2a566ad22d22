#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lifemine/core.hpp"
#include "lifemine/factorize.hpp"
#include "lifemine/stats.hpp"

namespace lifemine {

struct GroupKey {
  std::string city;
  Gender gender = Gender::unknown;

  auto operator<=>(const GroupKey&) const = default;
  std::string label() const { return city + "/" + lifemine::to_string(gender); }
};

enum class Grouping { city, city_gender };

// One hour interval of the cyclic day, inclusive on both ends.
struct HourRange {
  int start = 0;
  int end = 0;

  bool operator==(const HourRange&) const = default;
};

// Work-rest ranges extracted from a 24-hour activity profile by walking the
// day cyclically from anchor_hour and cutting at cumulative mass fractions.
struct TimeRanges {
  HourRange get_up;
  HourRange most_active;
  HourRange go_to_bed;
  double fractions[3] = {0.15, 0.70, 0.15};
  int anchor_hour = 5;
};

struct GroupPreference {
  GroupKey key;
  std::vector<double> mean;  // k entries
  std::size_t size = 0;
};

struct GroupPreferences {
  std::vector<GroupPreference> groups;   // ordered by key
  std::vector<std::string> warnings;     // empty groups etc.
};

struct LifestyleClusters {
  Eigen::MatrixXd centers;                     // n_clusters x k
  std::vector<int> assignments;                // per W row
  double wcss = 0.0;
  // Per cluster: group -> share, where each member weighs 1/|city| before
  // shares are renormalized to sum 1 within the cluster.
  std::vector<std::map<GroupKey, double>> composition;
  std::vector<std::map<GroupKey, std::size_t>> member_counts;
};

// User x 24 counts for check-ins on the given day class. Rows ordered by
// (city, user_id); users without qualifying check-ins keep a zero row.
ActivityMatrix build_temporal_matrix(const Dataset& ds, DayFilter day_class);

// User x category counts; a multi-category check-in increments each of its
// categories listed in `categories`.
ActivityMatrix build_spatial_matrix(const Dataset& ds,
                                    const std::vector<std::string>& categories);

// All categories present in the dataset's check-ins, ordered by total count
// descending then name.
std::vector<std::string> categories_by_count(const Dataset& ds);

enum class TensorTimeMode { hour24, dow7 };

// User x time x category counts over the top_p categories; users with fewer
// than prune_h check-ins total are dropped. If fewer than top_p categories
// exist, all are used.
ActivityTensor build_tensor(const Dataset& ds, TensorTimeMode time_mode,
                            int top_p = 100, int prune_h = 5);

// Mean preference vector (W rows) per group; groups without members are
// omitted with a warning.
GroupPreferences group_preferences(const Eigen::MatrixXd& w,
                                   const std::vector<std::string>& row_keys,
                                   const Dataset& ds, Grouping grouping);

// Walks hours cyclically from anchor 5; get_up ends at the first hour where
// the cumulative mass fraction reaches 0.15, most_active where it reaches
// 0.85, go_to_bed covers the remaining support. Range starts snap to the
// next hour with mass. Throws on an all-zero profile.
TimeRanges extract_time_ranges(const std::vector<double>& profile_24h);

struct ClusterOptions {
  int n_clusters = 5;
  std::uint64_t seed = 0;
  int restarts = 8;
  int max_iter = 100;
  bool normalize_rows = false;  // L1 row normalization before clustering
  int threads = 1;              // restart-level parallelism
};

// Lloyd's k-means with k-means++ seeding, best of `restarts` runs by
// within-cluster sum of squares (ties go to the lowest restart index).
// Empty clusters are re-seeded with the point farthest from its center.
LifestyleClusters cluster_preferences(const Eigen::MatrixXd& w,
                                      const std::vector<std::string>& row_keys,
                                      const Dataset& ds,
                                      const ClusterOptions& opts);

}  // namespace lifemine
