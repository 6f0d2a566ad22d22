#include "lifemine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lifemine/rng.hpp"

namespace lifemine::synth {

using nlohmann::json;

namespace {

constexpr double kMetersPerDegLat = 6'371'000.0 * 3.14159265358979323846 / 180.0;

Eigen::MatrixXd normalize_rows_to_unit_mass(Eigen::MatrixXd m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = m.row(i).sum();
    if (s <= 0.0)
      throw std::invalid_argument("synth: profile/mix row with zero mass");
    m.row(i) /= s;
  }
  return m;
}

}  // namespace

Eigen::MatrixXd circadian_profiles() {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 24);
  // early bird: up 6-8, busy through early afternoon, winds down 20-22
  for (int h = 6; h <= 8; ++h) p(0, h) = 5.0;
  for (int h = 9; h <= 14; ++h) p(0, h) = 35.0 / 3.0;
  for (int h = 20; h <= 22; ++h) p(0, h) = 5.0;
  // intermediate: up 8-10, afternoon-evening activity, to bed 22-23
  for (int h = 8; h <= 10; ++h) p(1, h) = 5.0;
  for (int h = 14; h <= 20; ++h) p(1, h) = 10.0;
  p(1, 22) = 7.5;
  p(1, 23) = 7.5;
  // night owl: up 10-12, active 21-01, to bed 3-4
  for (int h = 10; h <= 12; ++h) p(2, h) = 5.0;
  p(2, 21) = 14.0;
  p(2, 22) = 14.0;
  p(2, 23) = 14.0;
  p(2, 0) = 14.0;
  p(2, 1) = 14.0;
  p(2, 3) = 7.5;
  p(2, 4) = 7.5;
  return normalize_rows_to_unit_mass(std::move(p));
}

std::vector<std::string> default_categories() {
  return {"Home (private)", "Office",        "Bar",
          "Music Venue",    "Nightclub",     "Lounge",
          "American Restaurant", "Grocery Store", "Supermarket",
          "Fast Food",      "Diner",         "Coffee Shop",
          "Gym",            "Yoga Studio",   "Park",
          "Plaza",          "Train Station", "Subway",
          "Church",         "Drugstore",     "Hotel",
          "Arts & Entertainment", "College Residence Hall", "High School"};
}

Eigen::MatrixXd default_category_mixes() {
  auto cats = default_categories();
  std::map<std::string, int> idx;
  for (std::size_t i = 0; i < cats.size(); ++i) idx[cats[i]] = i;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, cats.size());
  auto set = [&](int row, const char* cat, double w) { m(row, idx.at(cat)) = w; };
  // home-centric
  set(0, "Home (private)", 0.45);
  set(0, "Grocery Store", 0.15);
  set(0, "Supermarket", 0.12);
  set(0, "Church", 0.08);
  set(0, "Drugstore", 0.08);
  set(0, "Coffee Shop", 0.07);
  set(0, "Park", 0.05);
  // office
  set(1, "Office", 0.40);
  set(1, "Coffee Shop", 0.15);
  set(1, "American Restaurant", 0.12);
  set(1, "Train Station", 0.10);
  set(1, "Subway", 0.08);
  set(1, "Gym", 0.08);
  set(1, "Fast Food", 0.07);
  // nightlife
  set(2, "Bar", 0.35);
  set(2, "Music Venue", 0.15);
  set(2, "Nightclub", 0.15);
  set(2, "Lounge", 0.10);
  set(2, "American Restaurant", 0.10);
  set(2, "Diner", 0.08);
  set(2, "Arts & Entertainment", 0.07);
  return normalize_rows_to_unit_mass(std::move(m));
}

void SynthSpec::validate() const {
  if (profiles.cols() != 24)
    throw std::invalid_argument("synth: profiles must have 24 columns");
  if (category_mixes.rows() != profiles.rows())
    throw std::invalid_argument("synth: mixes and profiles disagree on k");
  if (static_cast<std::size_t>(category_mixes.cols()) != categories.size())
    throw std::invalid_argument("synth: mix columns != categories");
  if (cities.empty()) throw std::invalid_argument("synth: no cities");
  for (const auto& c : cities) {
    if (c.n_users <= 0)
      throw std::invalid_argument("synth: city with no users");
    if (static_cast<int>(c.component_means.size()) != k())
      throw std::invalid_argument("synth: component_means length != k");
    for (double v : c.component_means)
      if (v < 0.0) throw std::invalid_argument("synth: negative mean weight");
    if (c.male_frac < 0 || c.female_frac < 0 ||
        c.male_frac + c.female_frac > 1.0 + 1e-9)
      throw std::invalid_argument("synth: bad gender fractions");
  }
  if (n_days < 7)
    throw std::invalid_argument("synth: n_days must cover a week");
  if (weekend_share < 0.0 || weekend_share > 1.0)
    throw std::invalid_argument("synth: weekend_share out of [0,1]");
  if (venues_per_category < 1)
    throw std::invalid_argument("synth: venues_per_category < 1");
  if (venueless.within_frac < 0 || venueless.beyond_frac < 0 ||
      venueless.within_frac + venueless.beyond_frac > 1.0)
    throw std::invalid_argument("synth: bad venueless fractions");
  if (!(venue_grid_spacing_m > 2.0 * std::max(venueless.within_m,
                                              venueless.beyond_m)))
    throw std::invalid_argument(
        "synth: grid spacing must dominate planted offsets");
}

SynthSpec SynthSpec::defaults() {
  SynthSpec s;
  s.start_date = *parse_civil_date("2012-06-04");
  s.profiles = circadian_profiles();
  s.categories = default_categories();
  s.category_mixes = default_category_mixes();
  return s;
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& j, int cols_expected) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("synth: expected a non-empty array of rows");
  Eigen::MatrixXd m(j.size(), cols_expected);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != cols_expected)
      throw std::invalid_argument("synth: profile row has wrong length");
    for (int c = 0; c < cols_expected; ++c) m(i, c) = row[c].get<double>();
  }
  return m;
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

SynthSpec SynthSpec::from_json_text(const std::string& text) {
  json j = json::parse(text);
  SynthSpec s = defaults();
  reject_unknown_keys(
      j,
      {"seed", "start_date", "n_days", "poisson_noise", "weekend_share",
       "profiles", "category_mixes", "categories", "cities",
       "venues_per_category", "venue_grid_spacing_m", "venueless"},
      "synth spec");
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("start_date")) {
    auto d = parse_civil_date(j["start_date"].get<std::string>());
    if (!d) throw std::invalid_argument("synth: bad start_date");
    s.start_date = *d;
  }
  if (j.contains("n_days")) s.n_days = j["n_days"].get<int>();
  if (j.contains("poisson_noise")) s.poisson_noise = j["poisson_noise"].get<bool>();
  if (j.contains("weekend_share")) s.weekend_share = j["weekend_share"].get<double>();
  if (j.contains("categories"))
    s.categories = j["categories"].get<std::vector<std::string>>();
  if (j.contains("profiles")) {
    if (j["profiles"].is_string()) {
      if (j["profiles"] != "circadian")
        throw std::invalid_argument("synth: unknown profile preset");
      s.profiles = circadian_profiles();
    } else {
      s.profiles = normalize_rows_to_unit_mass(matrix_from_json(j["profiles"], 24));
    }
  }
  if (j.contains("category_mixes")) {
    if (j["category_mixes"].is_string()) {
      if (j["category_mixes"] != "default")
        throw std::invalid_argument("synth: unknown mix preset");
      if (j.contains("categories"))
        throw std::invalid_argument(
            "synth: default mixes require default categories");
      s.category_mixes = default_category_mixes();
    } else {
      // one object per component: {category: weight}
      const auto& arr = j["category_mixes"];
      if (!arr.is_array() || arr.empty())
        throw std::invalid_argument("synth: category_mixes must be an array");
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(arr.size(), s.categories.size());
      std::map<std::string, int> idx;
      for (std::size_t i = 0; i < s.categories.size(); ++i)
        idx[s.categories[i]] = i;
      for (std::size_t r = 0; r < arr.size(); ++r) {
        for (auto it = arr[r].begin(); it != arr[r].end(); ++it) {
          auto f = idx.find(it.key());
          if (f == idx.end())
            throw std::invalid_argument("synth: mix category '" + it.key() +
                                        "' not in categories");
          m(r, f->second) = it.value().get<double>();
        }
      }
      s.category_mixes = normalize_rows_to_unit_mass(std::move(m));
    }
  } else if (j.contains("categories")) {
    throw std::invalid_argument(
        "synth: custom categories need category_mixes");
  }
  if (j.contains("cities")) {
    s.cities.clear();
    for (const auto& cj : j["cities"]) {
      reject_unknown_keys(cj,
                          {"name", "n_users", "center_lat", "center_lon",
                           "component_means", "male_frac", "female_frac"},
                          "city");
      SynthCity c;
      c.name = cj.at("name").get<std::string>();
      c.n_users = cj.at("n_users").get<int>();
      c.center_lat = cj.value("center_lat", 0.0);
      c.center_lon = cj.value("center_lon", 0.0);
      c.component_means = cj.at("component_means").get<std::vector<double>>();
      c.male_frac = cj.value("male_frac", 0.4);
      c.female_frac = cj.value("female_frac", 0.4);
      s.cities.push_back(std::move(c));
    }
  }
  if (j.contains("venues_per_category"))
    s.venues_per_category = j["venues_per_category"].get<int>();
  if (j.contains("venue_grid_spacing_m"))
    s.venue_grid_spacing_m = j["venue_grid_spacing_m"].get<double>();
  if (j.contains("venueless")) {
    const auto& vj = j["venueless"];
    reject_unknown_keys(vj, {"within_frac", "within_m", "beyond_frac", "beyond_m"},
                        "venueless");
    s.venueless.within_frac = vj.value("within_frac", 0.0);
    s.venueless.within_m = vj.value("within_m", 15.0);
    s.venueless.beyond_frac = vj.value("beyond_frac", 0.0);
    s.venueless.beyond_m = vj.value("beyond_m", 45.0);
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read synth spec " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

namespace {

struct PlantedUser {
  std::string user_id;
  std::string city;
  Gender gender = Gender::unknown;
  Eigen::VectorXd weights;  // k, unscaled
};

std::string padded_id(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return prefix + buf;
}

// Users in (city, user_id) order with weights drawn from a dedicated stream,
// shared by the matrix, tensor and dataset generators.
std::vector<PlantedUser> planted_users(const SynthSpec& spec) {
  std::vector<PlantedUser> users;
  for (const auto& c : spec.cities) {
    int n_male = static_cast<int>(c.male_frac * c.n_users + 0.5);
    int n_female = static_cast<int>(c.female_frac * c.n_users + 0.5);
    if (n_male + n_female > c.n_users) n_female = c.n_users - n_male;
    for (int i = 0; i < c.n_users; ++i) {
      PlantedUser u;
      u.user_id = padded_id(c.name + "_u", i);
      u.city = c.name;
      u.gender = i < n_male              ? Gender::male
                 : i < n_male + n_female ? Gender::female
                                         : Gender::unknown;
      users.push_back(std::move(u));
    }
  }
  std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) {
    if (a.city != b.city) return a.city < b.city;
    return a.user_id < b.user_id;
  });
  std::map<std::string, const SynthCity*> city_of;
  for (const auto& c : spec.cities) city_of[c.name] = &c;
  Rng rng = stream_rng(spec.seed, "weights");
  for (auto& u : users) {
    const auto& means = city_of.at(u.city)->component_means;
    u.weights.resize(spec.k());
    for (int j = 0; j < spec.k(); ++j)
      u.weights(j) = means[j] * rng.uniform(0.5, 1.5);
  }
  return users;
}

double day_class_factor(const SynthSpec& spec, DayFilter day_class) {
  switch (day_class) {
    case DayFilter::weekday: return 1.0 - spec.weekend_share;
    case DayFilter::weekend: return spec.weekend_share;
    default: return 1.0;
  }
}

// Expected hour x category counts for one user under one day class.
Eigen::MatrixXd user_lambda(const SynthSpec& spec, const PlantedUser& u,
                            double factor) {
  const int cc = static_cast<int>(spec.categories.size());
  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(24, cc);
  for (int h = 0; h < 24; ++h)
    for (int c = 0; c < cc; ++c) {
      double s = 0.0;
      for (int j = 0; j < spec.k(); ++j)
        s += u.weights(j) * spec.profiles(j, h) * spec.category_mixes(j, c);
      lam(h, c) = factor * s;
    }
  return lam;
}

// One count sample per user; the iteration order here is the seed-stream
// contract between generate_matrix and generate_dataset.
std::vector<Eigen::MatrixXd> sample_counts(const SynthSpec& spec,
                                           const std::vector<PlantedUser>& users,
                                           DayFilter day_class) {
  std::string stream =
      day_class == DayFilter::weekday ? "counts/weekday" : "counts/weekend";
  Rng rng = stream_rng(spec.seed, stream);
  double factor = day_class_factor(spec, day_class);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(users.size());
  for (const auto& u : users) {
    Eigen::MatrixXd lam = user_lambda(spec, u, factor);
    Eigen::MatrixXd counts(24, lam.cols());
    for (int h = 0; h < 24; ++h)
      for (Eigen::Index c = 0; c < lam.cols(); ++c)
        counts(h, c) =
            spec.poisson_noise
                ? static_cast<double>(rng.poisson(lam(h, c)))
                : std::floor(lam(h, c) + 0.5);
    out.push_back(std::move(counts));
  }
  return out;
}

}  // namespace

SynthMatrix generate_matrix(const SynthSpec& spec, SynthTarget target,
                            DayFilter day_class) {
  spec.validate();
  auto users = planted_users(spec);
  const int k = spec.k();
  const double factor = day_class_factor(spec, day_class);

  SynthMatrix out;
  out.w_true.resize(users.size(), k);
  for (std::size_t i = 0; i < users.size(); ++i)
    out.w_true.row(i) = factor * users[i].weights.transpose();
  out.l_true =
      target == SynthTarget::temporal ? spec.profiles : spec.category_mixes;

  out.matrix.col_labels = target == SynthTarget::temporal
                              ? bucket_labels(Bucketing::hour24)
                              : spec.categories;
  for (const auto& u : users) out.matrix.row_keys.push_back(u.user_id);

  if (!spec.poisson_noise) {
    out.matrix.values = out.w_true * out.l_true;
    return out;
  }
  auto marginalize = [&](const std::vector<Eigen::MatrixXd>& counts,
                         Eigen::MatrixXd& into) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (target == SynthTarget::temporal)
        into.row(i) += counts[i].rowwise().sum().transpose();
      else
        into.row(i) += counts[i].colwise().sum();
    }
  };
  const int cols = target == SynthTarget::temporal
                       ? 24
                       : static_cast<int>(spec.categories.size());
  out.matrix.values = Eigen::MatrixXd::Zero(users.size(), cols);
  if (day_class == DayFilter::all) {
    marginalize(sample_counts(spec, users, DayFilter::weekday),
                out.matrix.values);
    marginalize(sample_counts(spec, users, DayFilter::weekend),
                out.matrix.values);
  } else {
    marginalize(sample_counts(spec, users, day_class), out.matrix.values);
  }
  return out;
}

SynthTensor generate_tensor(const SynthSpec& spec, DayFilter day_class) {
  spec.validate();
  auto users = planted_users(spec);
  const double factor = day_class_factor(spec, day_class);

  SynthTensor out;
  out.w_true.resize(users.size(), spec.k());
  for (std::size_t i = 0; i < users.size(); ++i)
    out.w_true.row(i) = factor * users[i].weights.transpose();
  out.lm_true = spec.profiles;
  out.lp_true = spec.category_mixes;

  out.tensor.resize(users.size(), 24, spec.categories.size());
  out.tensor.time_labels = bucket_labels(Bucketing::hour24);
  out.tensor.category_labels = spec.categories;
  for (const auto& u : users) out.tensor.user_keys.push_back(u.user_id);
  out.tensor.provenance = "synth seed=" + std::to_string(spec.seed);

  if (!spec.poisson_noise) {
    ActivityTensor exact =
        tensor_from_factors(out.w_true, out.lm_true, out.lp_true);
    out.tensor.values = std::move(exact.values);
    return out;
  }
  auto counts = sample_counts(spec, users, day_class);
  for (std::size_t i = 0; i < users.size(); ++i)
    for (int h = 0; h < 24; ++h)
      for (std::size_t c = 0; c < spec.categories.size(); ++c)
        out.tensor.at(i, h, c) = counts[i](h, c);
  return out;
}

SynthDataset generate_dataset(const SynthSpec& spec) {
  spec.validate();
  auto users = planted_users(spec);

  SynthDataset out;
  out.ds.provenance = "synth seed=" + std::to_string(spec.seed);
  out.w_true.resize(users.size(), spec.k());
  for (std::size_t i = 0; i < users.size(); ++i) {
    out.w_true.row(i) = users[i].weights.transpose();
    out.user_order.push_back(users[i].user_id);
    out.ds.users.push_back({users[i].user_id, users[i].city, users[i].gender});
  }

  // Venue grid per city; category v % |categories| so every category is
  // covered venues_per_category times.
  const int cc = static_cast<int>(spec.categories.size());
  const int nv = cc * spec.venues_per_category;
  std::map<std::string, std::vector<std::size_t>> venues_of_cat_by_city_key;
  std::map<std::string, const SynthCity*> city_of;
  for (const auto& c : spec.cities) city_of[c.name] = &c;
  for (const auto& c : spec.cities) {
    int grid = static_cast<int>(std::ceil(std::sqrt(double(nv))));
    for (int v = 0; v < nv; ++v) {
      Venue ven;
      ven.venue_id = padded_id(c.name + "_v", v);
      int row = v / grid, col = v % grid;
      ven.lat = c.center_lat +
                row * spec.venue_grid_spacing_m / kMetersPerDegLat;
      double coslat = std::cos(c.center_lat * 3.14159265358979323846 / 180.0);
      ven.lon = c.center_lon +
                col * spec.venue_grid_spacing_m / (kMetersPerDegLat * coslat);
      ven.categories = {spec.categories[v % cc]};
      venues_of_cat_by_city_key[c.name + "/" + spec.categories[v % cc]]
          .push_back(out.ds.venues.size());
      out.ds.venues.push_back(std::move(ven));
    }
  }

  // Calendar split of the generation window.
  std::vector<CivilDateTime> weekdays, weekends;
  for (int d = 0; d < spec.n_days; ++d) {
    CivilDateTime day = spec.start_date.add_days(d);
    (day.is_weekend() ? weekends : weekdays).push_back(day);
  }

  auto counts_wd = sample_counts(spec, users, DayFilter::weekday);
  auto counts_we = sample_counts(spec, users, DayFilter::weekend);

  // Venue-less planting: a deterministic phase in [0,100) per emitted
  // check-in; fractions are exact over each 100-emission window.
  const int within_slots = static_cast<int>(spec.venueless.within_frac * 100 + 0.5);
  const int beyond_slots = static_cast<int>(spec.venueless.beyond_frac * 100 + 0.5);
  std::uint64_t emit_idx = 0;

  auto emit_class = [&](const std::vector<Eigen::MatrixXd>& counts,
                        const std::vector<CivilDateTime>& days) {
    if (days.empty()) return;
    for (std::size_t i = 0; i < users.size(); ++i) {
      std::uint64_t day_counter = 0;
      std::map<int, std::uint64_t> venue_rot;
      for (int h = 0; h < 24; ++h)
        for (int c = 0; c < cc; ++c) {
          auto n = static_cast<std::uint64_t>(counts[i](h, c));
          for (std::uint64_t e = 0; e < n; ++e) {
            const auto& pool = venues_of_cat_by_city_key.at(
                users[i].city + "/" + spec.categories[c]);
            const Venue& ven =
                out.ds.venues[pool[venue_rot[c]++ % pool.size()]];
            CheckIn ci;
            ci.user_id = users[i].user_id;
            ci.timestamp = days[day_counter++ % days.size()];
            ci.timestamp.hour = h;
            ci.timestamp.minute = static_cast<int>((emit_idx * 7) % 60);
            ci.lat = ven.lat;
            ci.lon = ven.lon;
            PlantedCheckin truth;
            truth.true_venue_id = ven.venue_id;
            int phase = static_cast<int>(emit_idx % 100);
            if (phase < within_slots) {
              truth.kind = PlantKind::stripped_within;
              ci.lat += spec.venueless.within_m / kMetersPerDegLat;
            } else if (phase < within_slots + beyond_slots) {
              truth.kind = PlantKind::stripped_beyond;
              ci.lat += spec.venueless.beyond_m / kMetersPerDegLat;
            } else {
              ci.venue_id = ven.venue_id;
              ci.categories = ven.categories;
            }
            out.truth.push_back(std::move(truth));
            out.ds.checkins.push_back(std::move(ci));
            ++emit_idx;
          }
        }
    }
  };
  emit_class(counts_wd, weekdays);
  emit_class(counts_we, weekends);
  out.ds.rebuild_indices();
  return out;
}

}  // namespace lifemine::synth
