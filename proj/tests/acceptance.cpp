// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lifemine/core.hpp"
#include "lifemine/factorize.hpp"
#include "lifemine/lifestyle.hpp"
#include "lifemine/pipeline.hpp"
#include "lifemine/preprocess.hpp"
#include "lifemine/rng.hpp"
#include "lifemine/stats.hpp"
#include "lifemine/synth.hpp"

using namespace lifemine;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

struct Criterion {
  std::string detail;
  bool ok = true;

  void expect(bool cond, const std::string& why) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += why;
    }
  }
  void note(const std::string& info) {
    if (!detail.empty()) detail += "; ";
    detail += info;
  }
};

void report(int num, const std::string& name, const Criterion& c) {
  std::printf("[%s] C%d %s%s%s\n", c.ok ? "PASS" : "FAIL", num, name.c_str(),
              c.detail.empty() ? "" : " -- ", c.detail.c_str());
  if (!c.ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd random_nonneg(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform_pos();
  return m;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// --- C1: NMF planted recovery ---------------------------------------------

void criterion1() {
  Criterion c;
  Rng rng(101);
  Eigen::MatrixXd w_true = random_nonneg(200, 3, rng);
  Eigen::MatrixXd l_true = random_nonneg(3, 24, rng);
  ActivityMatrix a;
  a.values = w_true * l_true;
  for (int i = 0; i < 200; ++i) a.row_keys.push_back("u" + std::to_string(i));
  for (int j = 0; j < 24; ++j) a.col_labels.push_back(std::to_string(j));

  NmfOptions opts;
  opts.tol = 0.0;  // run the full 500 iterations
  opts.max_iter = 500;
  opts.seed = 7;
  auto t0 = Clock::now();
  FactorModel m = nmf(a, 3, opts);
  double elapsed = seconds_since(t0);

  double rel = (a.values - m.W * m.L).norm() / a.values.norm();
  c.expect(rel <= 1e-3, "relative error " + fmt(rel) + " > 1e-3");
  // non-increasing up to evaluation roundoff (~1e-15 relative wiggle);
  // a genuine update bug shows up orders of magnitude above this slack
  bool monotone = true;
  const double slack = 1e-12 * m.objective_trace[0];
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
    if (m.objective_trace[i] > m.objective_trace[i - 1] + slack)
      monotone = false;
  c.expect(monotone, "objective trace increased");
  c.expect(m.iterations <= 500, "iteration cap exceeded");
  c.expect(elapsed < 5.0, "runtime " + fmt(elapsed) + "s >= 5s");
  c.note("rel_err=" + fmt(rel) + " time=" + fmt(elapsed) + "s");
  report(1, "NMF planted recovery (200x24, k=3)", c);
}

// --- C2: CP-ALS planted recovery -------------------------------------------

void criterion2() {
  Criterion c;
  Rng rng(202);
  Eigen::MatrixXd w_true = random_nonneg(100, 3, rng);
  Eigen::MatrixXd lm_true = random_nonneg(3, 24, rng);
  Eigen::MatrixXd lp_true = random_nonneg(3, 50, rng);
  ActivityTensor t = tensor_from_factors(w_true, lm_true, lp_true);
  double norm_t = frobenius_norm(t);

  auto t0 = Clock::now();
  CpOptions opts;
  opts.tol = 1e-5;
  opts.max_iter = 500;
  opts.seed = 11;
  opts.init = CpInit::random;
  TensorFactorModel mr = cp_als(t, 3, opts);
  opts.init = CpInit::singular_vector;
  TensorFactorModel ms = cp_als(t, 3, opts);
  double elapsed = seconds_since(t0);

  double fit_r = 1.0 - mr.final_error() / norm_t;
  double fit_s = 1.0 - ms.final_error() / norm_t;
  c.expect(fit_r >= 0.99, "random-init fit " + fmt(fit_r) + " < 0.99");
  c.expect(fit_s >= 0.99, "svd-init fit " + fmt(fit_s) + " < 0.99");
  double rel_r = mr.final_error() / norm_t;
  double rel_s = ms.final_error() / norm_t;
  c.expect(std::abs(rel_r - rel_s) <= 0.05,
           "init modes disagree: " + fmt(rel_r) + " vs " + fmt(rel_s));

  // the 1e-5 improvement rule: every sweep but the last improved by >= tol,
  // unless the sweep budget ran out first
  for (const auto* m : {&mr, &ms}) {
    const auto& tr = m->fit_trace;
    for (std::size_t i = 1; i + 1 < tr.size(); ++i)
      c.expect(tr[i - 1] - tr[i] >= opts.tol,
               "stopped later than the improvement rule allows");
    if (m->iterations < opts.max_iter && tr.size() >= 2)
      c.expect(tr[tr.size() - 2] - tr.back() < opts.tol,
               "final sweep still improved by >= tol");
    for (std::size_t i = 1; i < tr.size(); ++i)
      c.expect(tr[i] <= tr[i - 1] + 1e-9 * tr[0], "error trace increased");
  }
  c.expect(elapsed < 30.0, "runtime " + fmt(elapsed) + "s >= 30s");
  c.note("fit_rand=" + fmt(fit_r) + " fit_svd=" + fmt(fit_s) +
         " time=" + fmt(elapsed) + "s");
  report(2, "CP-ALS planted recovery (100x24x50, both inits)", c);
}

// --- C3: Khatri-Rao and unfolding identities --------------------------------

void criterion3() {
  Criterion c;
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.uniform_index(6));
    int m = 2 + static_cast<int>(rng.uniform_index(6));
    int p = 2 + static_cast<int>(rng.uniform_index(6));
    int k = 1 + static_cast<int>(rng.uniform_index(4));
    Eigen::MatrixXd w = random_nonneg(n, k, rng);
    Eigen::MatrixXd lm = random_nonneg(k, m, rng);
    Eigen::MatrixXd lp = random_nonneg(k, p, rng);
    ActivityTensor t = tensor_from_factors(w, lm, lp);
    Eigen::MatrixXd u1 = lm.transpose(), u2 = lp.transpose();
    double d0 = (mode_unfold(t, 0) - w * khatri_rao(u1, u2).transpose())
                    .cwiseAbs()
                    .maxCoeff();
    double d1 = (mode_unfold(t, 1) - u1 * khatri_rao(w, u2).transpose())
                    .cwiseAbs()
                    .maxCoeff();
    double d2 = (mode_unfold(t, 2) - u2 * khatri_rao(w, u1).transpose())
                    .cwiseAbs()
                    .maxCoeff();
    worst = std::max({worst, d0, d1, d2});
  }
  c.expect(worst <= 1e-10, "identity residual " + fmt(worst) + " > 1e-10");
  c.note("max residual over 100 cases = " + fmt(worst));
  report(3, "Khatri-Rao / unfolding identities", c);
}

// --- C4: extension-join oracle equivalence ----------------------------------

void criterion4() {
  Criterion c;
  Rng rng(404);
  std::vector<Venue> venues;
  const double lat0 = 40.70, lon0 = -74.00;
  for (int v = 0; v < 100; ++v)
    venues.push_back({"v" + std::to_string(v), lat0 + rng.uniform(0.0, 0.012),
                      lon0 + rng.uniform(0.0, 0.012), {"Cat"}});
  const double radius = 30.0;
  VenueGrid grid(venues, radius);
  int assigned = 0, mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    double lat = lat0 + rng.uniform(0.0, 0.012);
    double lon = lon0 + rng.uniform(0.0, 0.012);
    std::ptrdiff_t got = grid.nearest_within(lat, lon);
    // all-pairs oracle
    std::ptrdiff_t want = -1;
    double best_d = 0.0;
    for (std::size_t v = 0; v < venues.size(); ++v) {
      double d = haversine_m(lat, lon, venues[v].lat, venues[v].lon);
      if (d > radius) continue;
      if (want < 0 || d < best_d ||
          (d == best_d && venues[v].venue_id < venues[want].venue_id)) {
        want = static_cast<std::ptrdiff_t>(v);
        best_d = d;
      }
    }
    if (got != want) ++mismatches;
    if (want >= 0) ++assigned;
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches");
  c.expect(assigned > 0, "degenerate fixture: nothing within radius");
  c.note(std::to_string(assigned) + "/1000 posts had a venue within 30 m");
  report(4, "grid extension equals the all-pairs oracle", c);
}

// --- C5: descriptive statistics ---------------------------------------------

void criterion5() {
  Criterion c;
  // visiting frequency fixture {a,a,a,b,b,c,c,c,c,d}
  {
    Dataset ds;
    ds.venues.push_back({"v1", 0, 0, {"Home"}});
    for (const char* u : {"a", "a", "a", "b", "b", "c", "c", "c", "c", "d"}) {
      CheckIn ci;
      ci.user_id = u;
      ci.timestamp = *CivilDateTime::parse("2012-06-04T09:00");
      ci.venue_id = "v1";
      ci.categories = {"Home"};
      ds.checkins.push_back(ci);
    }
    ds.register_missing_users();
    auto vs = visiting_frequency(ds);
    c.expect(vs.size() == 1 && vs[0].visiting_frequency == 2.5,
             "visiting frequency fixture != 2.5");
    auto box = category_box_stats(vs, ds);
    c.expect(box.size() == 1 && box[0].median == 2.5,
             "single-venue box stats wrong");
  }
  // quartiles of {1,2,3,4,5}
  {
    std::vector<double> v{1, 2, 3, 4, 5};
    c.expect(quantile_sorted(v, 0.25) == 2.0 && quantile_sorted(v, 0.5) == 3.0 &&
                 quantile_sorted(v, 0.75) == 4.0,
             "quantile fixture wrong");
  }
  // ccdf fixture and property
  {
    auto pts = ccdf({1, 2, 4});
    c.expect(pts.size() == 3 && pts[0].second == 1.0 &&
                 std::abs(pts[1].second - 2.0 / 3.0) < 1e-15 &&
                 std::abs(pts[2].second - 1.0 / 3.0) < 1e-15,
             "ccdf fixture wrong");
    Rng rng(505);
    bool monotone = true, bounded = true;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::uint64_t> counts;
      std::size_t n = 1 + rng.uniform_index(60);
      for (std::size_t i = 0; i < n; ++i)
        counts.push_back(rng.uniform_index(30));
      auto cf = ccdf(counts);
      for (std::size_t i = 0; i < cf.size(); ++i) {
        if (i && cf[i].second > cf[i - 1].second) monotone = false;
        if (cf[i].second <= 0.0 || cf[i].second > 1.0) bounded = false;
      }
    }
    c.expect(monotone, "ccdf not monotone on random inputs");
    c.expect(bounded, "ccdf left (0,1]");
  }
  // share fixture: 30/70 uniform split, and bucket sums on synthetic data
  {
    Dataset ds;
    for (int h = 0; h < 24; ++h)
      for (int i = 0; i < 10; ++i) {
        CheckIn ci;
        ci.user_id = "u";
        char buf[20];
        std::snprintf(buf, sizeof(buf), "2012-06-04T%02d:00", h);
        ci.timestamp = *CivilDateTime::parse(buf);
        ci.categories = {i < 3 ? "Park" : "Office"};
        ds.checkins.push_back(ci);
      }
    ds.register_missing_users();
    auto s = share_series(ds, Bucketing::hour24, {});
    bool exact = s.categories.size() == 2;
    for (int h = 0; exact && h < 24; ++h)
      exact = std::abs(s.shares[0][h] - 0.7) < 1e-12 &&
              std::abs(s.shares[1][h] - 0.3) < 1e-12;
    c.expect(exact, "30/70 share fixture wrong");

    auto spec = synth::SynthSpec::defaults();
    spec.seed = 55;
    spec.cities.push_back({"c", 25, 43.0, -77.0, {12.0, 10.0, 9.0}, 0.4, 0.4});
    auto sd = synth::generate_dataset(spec);
    auto series = share_series(sd.ds, Bucketing::hour24, {});
    for (std::size_t b = 0; b < series.bucket_labels.size(); ++b) {
      double sum = 0.0;
      for (std::size_t q = 0; q < series.categories.size(); ++q)
        sum += series.shares[q][b];
      if (sum > 1.0 + 1e-9) c.expect(false, "share sum exceeds 1 + 1e-9");
    }
  }
  report(5, "visiting frequency, CCDF and share-series fixtures", c);
}

// --- C6: time range extraction ----------------------------------------------

void criterion6() {
  Criterion c;
  // worked example: uniform mass over hours 7..21
  {
    std::vector<double> p(24, 0.0);
    for (int h = 7; h <= 21; ++h) p[h] = 1.0;
    TimeRanges r = extract_time_ranges(p);
    c.expect(r.get_up == HourRange{7, 9}, "uniform get_up wrong");
    c.expect(r.most_active == HourRange{10, 19}, "uniform most_active wrong");
    c.expect(r.go_to_bed == HourRange{20, 21}, "uniform go_to_bed wrong");
  }
  // planted profiles against the expected circadian bands, +-1 hour
  struct Band {
    int lo, hi;
  };
  struct Expected {
    const char* name;
    Band get_up, most_active, go_to_bed;
  };
  const Expected bands[3] = {
      {"early bird", {6, 8}, {7, 14}, {20, 22}},
      {"intermediate", {8, 10}, {14, 20}, {22, 0}},
      {"night owl", {10, 12}, {21, 1}, {3, 6}},
  };
  auto in_band = [](int hour, Band b, int slack) {
    int lo = (b.lo - slack + 24) % 24;
    int hi = (b.hi + slack) % 24;
    // cyclic membership
    int span = (hi - lo + 24) % 24;
    int off = (hour - lo + 24) % 24;
    return off <= span;
  };
  Eigen::MatrixXd prof = synth::circadian_profiles();
  for (int j = 0; j < 3; ++j) {
    std::vector<double> row(24);
    for (int h = 0; h < 24; ++h) row[h] = prof(j, h);
    TimeRanges r = extract_time_ranges(row);
    const Expected& e = bands[j];
    auto check_range = [&](HourRange got, Band want, const char* which) {
      c.expect(in_band(got.start, want, 1) && in_band(got.end, want, 1),
               std::string(e.name) + " " + which + " [" +
                   std::to_string(got.start) + "," + std::to_string(got.end) +
                   "] outside band +-1h");
    };
    check_range(r.get_up, e.get_up, "get_up");
    check_range(r.most_active, e.most_active, "most_active");
    check_range(r.go_to_bed, e.go_to_bed, "go_to_bed");
  }
  report(6, "time ranges match the circadian type bands (+-1h)", c);
}

// --- C7: two-city synthetic analog ------------------------------------------

void criterion7() {
  Criterion c;
  // (a) night-owl ordering over 100 seeded runs
  Eigen::VectorXd owl = synth::circadian_profiles().row(2).transpose();
  int correct = 0;
  for (int run = 0; run < 100; ++run) {
    auto spec = synth::SynthSpec::defaults();
    spec.seed = 9000 + run;
    spec.cities.push_back(
        {"acity", 50, 40.7, -74.0, {15.0, 12.0, 24.0}, 0.4, 0.4});
    spec.cities.push_back(
        {"bcity", 50, 43.1, -77.6, {15.0, 12.0, 12.0}, 0.4, 0.4});
    auto sm = synth::generate_matrix(spec, synth::SynthTarget::temporal,
                                     DayFilter::weekday);
    NmfOptions opts;
    opts.seed = 100 + run;
    opts.max_iter = 300;
    opts.tol = 1e-7;
    FactorModel m = nmf(sm.matrix, 3, opts);
    int owl_comp = 0;
    double best = -1.0;
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd lj = m.L.row(j).transpose();
      double cos = lj.dot(owl) / (lj.norm() * owl.norm() + 1e-300);
      if (cos > best) {
        best = cos;
        owl_comp = j;
      }
    }
    // contiguous city blocks: acity rows come first
    double mean_a = m.W.col(owl_comp).head(50).mean();
    double mean_b = m.W.col(owl_comp).tail(50).mean();
    if (mean_a > mean_b) ++correct;
  }
  c.expect(correct >= 95, "ordering recovered in only " +
                              std::to_string(correct) + "/100 runs");
  c.note("ordering correct in " + std::to_string(correct) + "/100 runs");

  // (b) planted 56/44 composition after city normalization
  {
    Dataset pop;
    std::vector<std::string> ids;
    // city A has 300 users, city B 200; the home-centric blob takes 105 from
    // A and 55 from B, which normalizes to exactly 56% / 44%
    Eigen::MatrixXd w(500, 2);
    int row = 0;
    Rng jitter(777);
    auto add = [&](const std::string& city, int idx, bool home) {
      std::string id = city + "_" + std::to_string(idx);
      pop.users.push_back({id, city, Gender::unknown});
      ids.push_back(id);
      w(row, 0) = (home ? 8.0 : 0.0) + jitter.uniform(0.0, 0.5);
      w(row, 1) = (home ? 0.0 : 8.0) + jitter.uniform(0.0, 0.5);
      ++row;
    };
    for (int i = 0; i < 300; ++i) add("cityA", i, i < 105);
    for (int i = 0; i < 200; ++i) add("cityB", i, i < 55);
    pop.rebuild_indices();

    ClusterOptions opts;
    opts.n_clusters = 2;
    opts.restarts = 5;
    opts.seed = 4242;
    LifestyleClusters lc = cluster_preferences(w, ids, pop, opts);
    int home_cluster = lc.centers(0, 0) > lc.centers(1, 0) ? 0 : 1;
    GroupKey a{"cityA", Gender::unknown}, b{"cityB", Gender::unknown};
    double share_a = lc.composition[home_cluster].count(a)
                         ? lc.composition[home_cluster].at(a)
                         : 0.0;
    double share_b = lc.composition[home_cluster].count(b)
                         ? lc.composition[home_cluster].at(b)
                         : 0.0;
    c.expect(std::abs(share_a - 0.56) <= 0.05,
             "city A share " + fmt(share_a) + " not within 0.56 +- 0.05");
    c.expect(std::abs(share_b - 0.44) <= 0.05,
             "city B share " + fmt(share_b) + " not within 0.44 +- 0.05");
    c.note("home cluster shares " + fmt(share_a) + "/" + fmt(share_b));
  }
  report(7, "two-city analog: ordering and 56/44 composition", c);
}

// --- C8: full-run determinism -----------------------------------------------

void criterion8() {
  Criterion c;
  fs::path out = fs::temp_directory_path() / "lifemine_acceptance_run";
  fs::remove_all(out);

  fs::path cfg_path = fs::path(LIFEMINE_SOURCE_DIR) / "configs" / "two_cities.json";
  PipelineConfig cfg;
  try {
    cfg = PipelineConfig::from_json_file(cfg_path.string());
  } catch (const std::exception& e) {
    c.expect(false, std::string("config load failed: ") + e.what());
    report(8, "byte-identical reports across two runs", c);
    return;
  }
  cfg.out_dir = out.string();

  auto snapshot = [&]() {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(out))
      if (e.is_regular_file()) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), out).string()] = ss.str();
      }
    return files;
  };

  PipelineResult r1 = run_pipeline(cfg);
  c.expect(r1.exit_code == 0, "first run failed: " + r1.message);
  if (r1.exit_code != 0) {
    report(8, "byte-identical reports across two runs", c);
    return;
  }
  auto s1 = snapshot();
  PipelineResult r2 = run_pipeline(cfg);
  c.expect(r2.exit_code == 0, "second run failed: " + r2.message);
  auto s2 = snapshot();

  c.expect(s1.size() == s2.size(), "file sets differ");
  std::size_t diff = 0;
  for (const auto& [name, body] : s1) {
    auto it = s2.find(name);
    if (it == s2.end() || it->second != body) ++diff;
  }
  c.expect(diff == 0, std::to_string(diff) + " files differ between runs");
  c.note(std::to_string(s1.size()) + " report files compared");
  fs::remove_all(out);
  report(8, "byte-identical reports across two runs", c);
}

// --- C9: filter boundary semantics ------------------------------------------

void criterion9() {
  Criterion c;
  auto mk = [](const std::string& uid, const char* ts) {
    CheckIn ci;
    ci.user_id = uid;
    ci.timestamp = *CivilDateTime::parse(ts);
    return ci;
  };
  // span of exactly 7 days is kept
  {
    Dataset ds;
    ds.checkins.push_back(mk("u", "2012-06-04T12:00"));
    ds.checkins.push_back(mk("u", "2012-06-11T12:00"));
    ds.register_missing_users();
    c.expect(filter_tourists(ds, 7).users.size() == 1,
             "span exactly 7 days was dropped");
    Dataset shorter;
    shorter.checkins.push_back(mk("u", "2012-06-04T12:00"));
    shorter.checkins.push_back(mk("u", "2012-06-11T11:59"));
    shorter.register_missing_users();
    c.expect(filter_tourists(shorter, 7).users.empty(),
             "span just under 7 days was kept");
  }
  // exactly 10 check-ins are kept
  {
    Dataset ds;
    for (int i = 0; i < 10; ++i) ds.checkins.push_back(mk("u", "2012-06-04T12:00"));
    ds.register_missing_users();
    c.expect(filter_low_activity(ds, 10).users.size() == 1,
             "exactly 10 check-ins was dropped");
    Dataset fewer;
    for (int i = 0; i < 9; ++i)
      fewer.checkins.push_back(mk("u", "2012-06-04T12:00"));
    fewer.register_missing_users();
    c.expect(filter_low_activity(fewer, 10).users.empty(),
             "9 check-ins passed a threshold of 10");
  }
  // exactly h=5 check-ins enter the tensor
  {
    Dataset ds;
    for (int i = 0; i < 5; ++i) {
      CheckIn ci = mk("five", "2012-06-04T09:00");
      ci.categories = {"Bar"};
      ds.checkins.push_back(ci);
    }
    for (int i = 0; i < 4; ++i) {
      CheckIn ci = mk("four", "2012-06-04T09:00");
      ci.categories = {"Bar"};
      ds.checkins.push_back(ci);
    }
    ds.register_missing_users();
    ActivityTensor t = build_tensor(ds, TensorTimeMode::hour24, 100, 5);
    c.expect(t.user_keys == std::vector<std::string>{"five"},
             "tensor prune boundary wrong");
  }
  report(9, "filter boundary semantics (7 days / 10 check-ins / h=5)", c);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
