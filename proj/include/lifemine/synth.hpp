#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lifemine/core.hpp"
#include "lifemine/factorize.hpp"
#include "lifemine/stats.hpp"

namespace lifemine::synth {

// One planted component couples a 24-hour profile with a category mixture,
// so hourly tallies, category tallies and the hour x category tensor all
// share the same ground truth.
struct SynthCity {
  std::string name;
  int n_users = 0;
  double center_lat = 0.0;
  double center_lon = 0.0;
  std::vector<double> component_means;  // expected check-ins per component
  double male_frac = 0.4;
  double female_frac = 0.4;
};

struct VenuelessPlan {
  double within_frac = 0.0;  // stripped of venue, offset north by within_m
  double within_m = 15.0;
  double beyond_frac = 0.0;
  double beyond_m = 45.0;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  CivilDateTime start_date;  // default 2012-06-04, a Monday
  int n_days = 28;
  bool poisson_noise = true;
  double weekend_share = 0.3;
  Eigen::MatrixXd profiles;        // k x 24, rows normalized to unit mass
  Eigen::MatrixXd category_mixes;  // k x |categories|, rows unit mass
  std::vector<std::string> categories;
  std::vector<SynthCity> cities;
  int venues_per_category = 2;
  double venue_grid_spacing_m = 100.0;
  VenuelessPlan venueless;

  int k() const { return static_cast<int>(profiles.rows()); }
  void validate() const;

  // Circadian band profiles with the default category registry and mixes.
  static SynthSpec defaults();
  static SynthSpec from_json_file(const std::string& path);
  static SynthSpec from_json_text(const std::string& text);
};

// The three work-rest band profiles (early bird, intermediate, night owl),
// rows normalized to unit mass.
Eigen::MatrixXd circadian_profiles();
std::vector<std::string> default_categories();
Eigen::MatrixXd default_category_mixes();

struct SynthMatrix {
  ActivityMatrix matrix;
  Eigen::MatrixXd w_true;  // N x k effective weights (day-class scaled)
  Eigen::MatrixXd l_true;  // k x M
};

enum class SynthTarget { temporal, spatial };

// With noise off, matrix = w_true * l_true exactly. With noise on, entries
// are Poisson draws around that product, marginalized from the same count
// sample generate_dataset emits.
SynthMatrix generate_matrix(const SynthSpec& spec,
                            SynthTarget target = SynthTarget::temporal,
                            DayFilter day_class = DayFilter::weekday);

struct SynthTensor {
  ActivityTensor tensor;
  Eigen::MatrixXd w_true;
  Eigen::MatrixXd lm_true;
  Eigen::MatrixXd lp_true;
};

SynthTensor generate_tensor(const SynthSpec& spec,
                            DayFilter day_class = DayFilter::weekday);

enum class PlantKind { kept, stripped_within, stripped_beyond };

struct PlantedCheckin {
  std::string true_venue_id;
  PlantKind kind = PlantKind::kept;
};

struct SynthDataset {
  Dataset ds;
  std::vector<PlantedCheckin> truth;  // parallel to ds.checkins
  Eigen::MatrixXd w_true;             // unscaled per-user weights, N x k
  std::vector<std::string> user_order;
};

// Emits check-in events whose weekday/weekend hour tallies equal the count
// sample of generate_matrix for the same spec. Venues sit on a grid spaced
// wide enough that the extension radius is unambiguous unless a venue-less
// plan plants closer offsets.
SynthDataset generate_dataset(const SynthSpec& spec);

}  // namespace lifemine::synth
