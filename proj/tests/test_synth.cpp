#include <doctest.h>

#include <filesystem>

#include "lifemine/lifestyle.hpp"
#include "lifemine/preprocess.hpp"
#include "lifemine/synth.hpp"

using namespace lifemine;
namespace fs = std::filesystem;

namespace {

synth::SynthSpec two_city_spec(std::uint64_t seed) {
  auto spec = synth::SynthSpec::defaults();
  spec.seed = seed;
  spec.cities.push_back({"acity", 12, 40.70, -74.00, {16.0, 12.0, 20.0}, 0.4, 0.4});
  spec.cities.push_back({"bcity", 10, 43.16, -77.61, {16.0, 12.0, 10.0}, 0.4, 0.4});
  return spec;
}

}  // namespace

TEST_CASE("noise off: matrix equals the planted product exactly") {
  auto spec = two_city_spec(3);
  spec.poisson_noise = false;
  for (auto target : {synth::SynthTarget::temporal, synth::SynthTarget::spatial}) {
    auto sm = synth::generate_matrix(spec, target, DayFilter::weekday);
    CHECK((sm.matrix.values - sm.w_true * sm.l_true).norm() == 0.0);
    CHECK(sm.matrix.values.rows() == 22);
    // every user has positive activity
    for (Eigen::Index i = 0; i < sm.matrix.values.rows(); ++i)
      CHECK(sm.matrix.values.row(i).sum() > 0.0);
  }
}

TEST_CASE("poisson deviation shrinks like 1/sqrt(scale)") {
  auto base = two_city_spec(12);
  auto deviation_at = [&](double scale) {
    auto spec = base;
    for (auto& c : spec.cities)
      for (auto& m : c.component_means) m *= scale;
    auto sm = synth::generate_matrix(spec, synth::SynthTarget::temporal,
                                     DayFilter::weekday);
    Eigen::MatrixXd mean = sm.w_true * sm.l_true;
    return (sm.matrix.values - mean).norm() / mean.norm();
  };
  double d_small = deviation_at(1e2 / 16.0);  // ~100 expected check-ins/user
  double d_large = deviation_at(1e4 / 16.0);
  CHECK(d_large < d_small);
  double ratio = d_small / d_large;
  CHECK(ratio > 5.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("generation is deterministic under the seed") {
  auto a = synth::generate_dataset(two_city_spec(9));
  auto b = synth::generate_dataset(two_city_spec(9));
  CHECK(a.ds == b.ds);
  auto c = synth::generate_dataset(two_city_spec(10));
  CHECK(!(a.ds == c.ds));
}

TEST_CASE("generated dataset round-trips through ingestion") {
  auto sd = synth::generate_dataset(two_city_spec(4));
  fs::path dir = fs::temp_directory_path() / "lifemine_test_synth_rt";
  fs::remove_all(dir);
  write_dataset_dir(sd.ds, dir.string());
  IngestReport rep;
  Dataset back = load_dataset_dir(dir.string(), rep);
  CHECK(rep.rejected() == 0);
  CHECK(back == sd.ds);
  CHECK(validate_dataset(back).empty());
  fs::remove_all(dir);
}

TEST_CASE("tally equivalence: dataset hour counts equal the matrix sample") {
  auto spec = two_city_spec(21);
  auto sd = synth::generate_dataset(spec);
  for (auto day_class : {DayFilter::weekday, DayFilter::weekend}) {
    auto sm = synth::generate_matrix(spec, synth::SynthTarget::temporal,
                                     day_class);
    ActivityMatrix tallied = build_temporal_matrix(sd.ds, day_class);
    REQUIRE(tallied.row_keys == sm.matrix.row_keys);
    CHECK(tallied.values == sm.matrix.values);
  }
  // spatial tallies agree as well when no venue-less stripping is planted
  auto sm = synth::generate_matrix(spec, synth::SynthTarget::spatial,
                                   DayFilter::all);
  ActivityMatrix spatial = build_spatial_matrix(sd.ds, spec.categories);
  CHECK(spatial.values == sm.matrix.values);
}

TEST_CASE("tensor sample marginals match the matrix sample") {
  auto spec = two_city_spec(33);
  auto st = synth::generate_tensor(spec, DayFilter::weekday);
  auto sm = synth::generate_matrix(spec, synth::SynthTarget::temporal,
                                   DayFilter::weekday);
  for (std::size_t i = 0; i < st.tensor.n; ++i)
    for (int h = 0; h < 24; ++h) {
      double sum = 0.0;
      for (std::size_t c = 0; c < st.tensor.p; ++c) sum += st.tensor.at(i, h, c);
      CHECK(sum == sm.matrix.values(i, h));
    }
}

TEST_CASE("no venue-less plan means extension is a no-op") {
  auto sd = synth::generate_dataset(two_city_spec(5));
  for (const auto& c : sd.ds.checkins) CHECK(c.has_venue());
  ExtensionConfig cfg;
  CHECK(extend_checkins(sd.ds, cfg) == sd.ds);
}

TEST_CASE("planted 29 m posts are re-assigned, 31 m posts are not") {
  auto spec = two_city_spec(8);
  spec.venueless.within_frac = 0.10;
  spec.venueless.within_m = 29.0;
  spec.venueless.beyond_frac = 0.10;
  spec.venueless.beyond_m = 31.0;
  auto sd = synth::generate_dataset(spec);

  std::size_t n_within = 0, n_beyond = 0;
  for (const auto& t : sd.truth) {
    if (t.kind == synth::PlantKind::stripped_within) ++n_within;
    if (t.kind == synth::PlantKind::stripped_beyond) ++n_beyond;
  }
  REQUIRE(n_within > 10);
  REQUIRE(n_beyond > 10);

  ExtensionConfig cfg;
  cfg.radius_m = 30.0;
  Dataset out = extend_checkins(sd.ds, cfg);
  REQUIRE(out.checkins.size() == sd.ds.checkins.size());
  for (std::size_t i = 0; i < out.checkins.size(); ++i) {
    const auto& truth = sd.truth[i];
    const auto& c = out.checkins[i];
    switch (truth.kind) {
      case synth::PlantKind::kept:
        CHECK(c.venue_id == truth.true_venue_id);
        break;
      case synth::PlantKind::stripped_within:
        CHECK(c.venue_id == truth.true_venue_id);  // recovered by extension
        CHECK(!sd.ds.checkins[i].has_venue());
        break;
      case synth::PlantKind::stripped_beyond:
        CHECK(c.venue_id.empty());
        break;
    }
  }
}

TEST_CASE("spec json parsing is strict") {
  CHECK_THROWS(synth::SynthSpec::from_json_text(R"({"bogus": 1})"));
  CHECK_THROWS(synth::SynthSpec::from_json_text(R"({"cities": []})"));
  auto spec = synth::SynthSpec::from_json_text(R"({
    "seed": 7,
    "n_days": 14,
    "cities": [
      {"name": "x", "n_users": 5, "component_means": [4.0, 4.0, 4.0]}
    ]
  })");
  CHECK(spec.seed == 7);
  CHECK(spec.n_days == 14);
  CHECK(spec.k() == 3);
  auto sd = synth::generate_dataset(spec);
  CHECK(sd.ds.users.size() == 5);
}
