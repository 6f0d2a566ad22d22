#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "lifemine/core.hpp"
#include "lifemine/csv.hpp"
#include "lifemine/factorize.hpp"
#include "lifemine/lifestyle.hpp"
#include "lifemine/pipeline.hpp"
#include "lifemine/preprocess.hpp"
#include "lifemine/rng.hpp"
#include "lifemine/stats.hpp"
#include "lifemine/svg.hpp"
#include "lifemine/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lifemine;

namespace {

// LIFEMINE_THREADS caps parallelism; 0 = unset.
int env_thread_cap() {
  const char* v = std::getenv("LIFEMINE_THREADS");
  if (!v) return 0;
  int n = std::atoi(v);
  return n < 1 ? 1 : n;
}

void print_ingest_report(const IngestReport& rep) {
  std::cout << "rows: " << rep.total_rows << " accepted: " << rep.accepted
            << " rejected: " << rep.rejected() << "\n";
  for (const auto& r : rep.rejects)
    std::cout << "  line " << r.line << ": " << r.reason << "\n";
}

json ingest_report_json(const IngestReport& rep) {
  json j;
  j["total_rows"] = rep.total_rows;
  j["accepted"] = rep.accepted;
  j["rejected"] = rep.rejected();
  json rj = json::array();
  for (const auto& r : rep.rejects)
    rj.push_back({{"line", r.line}, {"reason", r.reason}});
  j["rejects"] = rj;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

Bucketing parse_bucket(const std::string& s) {
  if (s == "hour24") return Bucketing::hour24;
  if (s == "dow7") return Bucketing::dow7;
  if (s == "month12") return Bucketing::month12;
  throw CLI::ValidationError("bucket", "must be hour24|dow7|month12");
}

DayFilter parse_days(const std::string& s) {
  if (s == "all") return DayFilter::all;
  if (s == "weekday") return DayFilter::weekday;
  if (s == "weekend") return DayFilter::weekend;
  throw CLI::ValidationError("days", "must be all|weekday|weekend");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lifemine - lifestyle mining from geo-tagged check-in streams"};
  app.require_subcommand(1);

  // ---- ingest ----------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "validate a dataset directory");
  std::string in_dir, out_dir, report_path;
  ingest->add_option("--in", in_dir, "dataset directory")->required();
  ingest->add_option("--out", out_dir, "write a normalized CSV copy here");
  ingest->add_option("--report", report_path, "write a JSON ingest report");

  // ---- preprocess ------------------------------------------------------
  auto* prep = app.add_subcommand("preprocess",
                                  "tourist/low-activity filters + extension");
  std::string p_in, p_out;
  ExtensionConfig pcfg;
  bool extend_first = false;
  prep->add_option("--in", p_in, "dataset directory")->required();
  prep->add_option("--out", p_out, "output dataset directory")->required();
  prep->add_option("--radius-m", pcfg.radius_m, "extension radius, meters");
  prep->add_option("--min-span-days", pcfg.min_span_days,
                   "minimum activity span in whole days");
  prep->add_option("--min-checkins", pcfg.min_checkins,
                   "minimum check-ins per user");
  prep->add_flag("--extend-first", extend_first,
                 "run extension before the user filters");

  // ---- stats -----------------------------------------------------------
  auto* st = app.add_subcommand("stats", "descriptive city-level statistics");
  std::string s_in, s_out, s_metric = "shares", s_bucket = "hour24",
                           s_days = "all", s_svg;
  int s_top_n = 10;
  bool s_no_dedupe = false;
  st->add_option("--in", s_in, "dataset directory")->required();
  st->add_option("--metric", s_metric, "visitfreq|ccdf|shares|box");
  st->add_option("--bucket", s_bucket, "hour24|dow7|month12");
  st->add_option("--top-n", s_top_n, "categories to keep");
  st->add_option("--days", s_days, "all|weekday|weekend");
  st->add_option("--out", s_out, "output CSV")->required();
  st->add_option("--svg", s_svg, "also emit a chart");
  st->add_flag("--no-dedupe", s_no_dedupe,
               "keep suffix-duplicate categories in the top-n");

  // ---- nmf -------------------------------------------------------------
  auto* nm = app.add_subcommand("nmf", "non-negative matrix factorization");
  std::string n_in, n_out;
  int n_k = 3, n_max_iter = 500;
  double n_tol = 1e-5;
  std::uint64_t n_seed = 42;
  nm->add_option("--in", n_in, "activity matrix CSV")->required();
  nm->add_option("--out", n_out, "model directory")->required();
  nm->add_option("--k", n_k, "components");
  nm->add_option("--tol", n_tol, "relative improvement tolerance");
  nm->add_option("--max-iter", n_max_iter, "iteration cap");
  nm->add_option("--seed", n_seed, "rng seed");

  // ---- cp --------------------------------------------------------------
  auto* cp = app.add_subcommand("cp", "CP decomposition of an activity tensor");
  std::string c_in, c_tensor_csv, c_out, c_init = "random",
                                         c_time_mode = "hour24";
  int c_k = 12, c_max_iter = 100, c_top_p = 100, c_prune_h = 5;
  double c_tol = 1e-5;
  bool c_rel_tol = false;
  std::uint64_t c_seed = 42;
  cp->add_option("--in", c_in, "dataset directory (tensor built from it)");
  cp->add_option("--tensor-csv", c_tensor_csv,
                 "sparse tensor triples: user_id,time_bucket,category,count");
  cp->add_option("--time-mode", c_time_mode, "hour24|dow7");
  cp->add_option("--top-p", c_top_p, "categories kept");
  cp->add_option("--prune-h", c_prune_h, "minimum check-ins per user");
  cp->add_option("--out", c_out, "model directory")->required();
  cp->add_option("--k", c_k, "components");
  cp->add_option("--tol", c_tol, "error improvement tolerance");
  cp->add_flag("--relative-tol", c_rel_tol, "treat --tol as relative");
  cp->add_option("--max-iter", c_max_iter, "sweep cap");
  cp->add_option("--init", c_init, "random|svd");
  cp->add_option("--seed", c_seed, "rng seed");

  // ---- lifestyles ------------------------------------------------------
  auto* lf = app.add_subcommand("lifestyles", "factorize + downstream analyses");
  std::string l_in, l_out, l_mode = "temporal", l_days = "weekday";
  int l_k = -1, l_clusters = 5, l_restarts = 8, l_max_iter = 500;
  double l_tol = 1e-5;
  std::uint64_t l_seed = 42;
  bool l_norm_rows = false, l_svg = false;
  lf->add_option("--in", l_in, "dataset directory")->required();
  lf->add_option("--out", l_out, "report directory")->required();
  lf->add_option("--mode", l_mode, "temporal|spatial|tensor-hour|tensor-dow");
  lf->add_option("--days", l_days, "weekday|weekend (temporal mode)");
  lf->add_option("--k", l_k, "components (default per mode: 3/10/12/5)");
  lf->add_option("--clusters", l_clusters, "k-means cluster count");
  lf->add_option("--restarts", l_restarts, "k-means restarts");
  lf->add_option("--tol", l_tol, "solver tolerance");
  lf->add_option("--max-iter", l_max_iter, "solver iteration cap");
  lf->add_option("--seed", l_seed, "rng seed");
  lf->add_flag("--normalize-rows", l_norm_rows, "L1-normalize W rows first");
  lf->add_flag("--svg", l_svg, "emit profile charts");

  // ---- synth -----------------------------------------------------------
  auto* sy = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string y_spec, y_out;
  std::uint64_t y_seed = 0;
  bool y_seed_set = false;
  sy->add_option("--spec", y_spec, "synth spec JSON")->required();
  sy->add_option("--out", y_out, "output dataset directory")->required();
  sy->add_option("--seed", y_seed, "override the spec seed")
      ->each([&](const std::string&) { y_seed_set = true; });

  // ---- run -------------------------------------------------------------
  auto* rn = app.add_subcommand("run", "full pipeline from a config file");
  std::string r_config, r_out_override;
  std::uint64_t r_seed = 0;
  bool r_seed_set = false, r_svg = false, r_deterministic = false;
  rn->add_option("--config", r_config, "pipeline config or run manifest JSON")
      ->required();
  rn->add_option("--out", r_out_override, "override config out_dir");
  rn->add_option("--seed", r_seed, "override config seed")
      ->each([&](const std::string&) { r_seed_set = true; });
  rn->add_flag("--svg", r_svg, "emit charts");
  rn->add_flag("--deterministic", r_deterministic,
               "force serial execution regardless of LIFEMINE_THREADS");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      IngestReport rep;
      Dataset ds = load_dataset_dir(in_dir, rep);
      print_ingest_report(rep);
      ValidationReport val = validate_dataset(ds);
      for (const auto& issue : val.issues)
        std::cout << "  " << issue.kind << ": " << issue.id << "\n";
      if (!report_path.empty()) {
        json j = ingest_report_json(rep);
        json vj = json::array();
        for (const auto& issue : val.issues)
          vj.push_back({{"kind", issue.kind}, {"id", issue.id}});
        j["validation"] = vj;
        write_text_file(report_path, j.dump(2) + "\n");
      }
      if (!out_dir.empty()) write_dataset_dir(ds, out_dir);
      return 0;
    }

    if (*prep) {
      pcfg.validate();
      IngestReport rep;
      Dataset ds = load_dataset_dir(p_in, rep);
      if (extend_first) ds = extend_checkins(ds, pcfg);
      ds = filter_tourists(ds, pcfg.min_span_days);
      ds = filter_low_activity(ds, pcfg.min_checkins);
      if (!extend_first) ds = extend_checkins(ds, pcfg);
      write_dataset_dir(ds, p_out);
      std::cout << "users: " << ds.users.size()
                << " checkins: " << ds.checkins.size() << "\n";
      return 0;
    }

    if (*st) {
      IngestReport rep;
      Dataset ds = load_dataset_dir(s_in, rep);
      if (s_metric == "visitfreq" || s_metric == "box") {
        auto vs = visiting_frequency(ds);
        std::ofstream out(s_out);
        if (s_metric == "visitfreq") {
          out << "venue_id,visits,unique_visitors,visiting_frequency\n";
          for (const auto& v : vs)
            out << csv::join_record({v.venue_id, std::to_string(v.visits),
                                     std::to_string(v.unique_visitors),
                                     csv::format_double(v.visiting_frequency)})
                << "\n";
        } else {
          auto box = category_box_stats(vs, ds);
          out << "category,n,min,q1,median,q3,max\n";
          for (const auto& b : box)
            out << csv::join_record(
                       {b.category, std::to_string(b.n),
                        csv::format_double(b.min), csv::format_double(b.q1),
                        csv::format_double(b.median), csv::format_double(b.q3),
                        csv::format_double(b.max)})
                << "\n";
          if (!s_svg.empty())
            write_text_file(s_svg, svg::box_plot(box, "Visiting frequency"));
        }
      } else if (s_metric == "ccdf") {
        auto vs = visiting_frequency(ds);
        std::vector<std::uint64_t> counts;
        for (const auto& v : vs) counts.push_back(v.visits);
        auto pts = ccdf(counts);
        std::ofstream out(s_out);
        out << "threshold,probability\n";
        for (const auto& [v, p] : pts)
          out << v << "," << csv::format_double(p) << "\n";
        if (!s_svg.empty())
          write_text_file(s_svg, svg::ccdf_loglog(pts, "CCDF"));
      } else if (s_metric == "shares") {
        ShareOptions so;
        so.top_n = s_top_n;
        so.day_filter = parse_days(s_days);
        so.dedupe_subsumed = !s_no_dedupe;
        auto series = share_series(ds, parse_bucket(s_bucket), so);
        std::ofstream out(s_out);
        std::vector<std::string> hdr{"bucket", "bucket_total"};
        hdr.insert(hdr.end(), series.categories.begin(), series.categories.end());
        out << csv::join_record(hdr) << "\n";
        for (std::size_t b = 0; b < series.bucket_labels.size(); ++b) {
          std::vector<std::string> rec{series.bucket_labels[b],
                                       csv::format_double(series.bucket_totals[b])};
          for (std::size_t c = 0; c < series.categories.size(); ++c)
            rec.push_back(csv::format_double(series.shares[c][b]));
          out << csv::join_record(rec) << "\n";
        }
        if (!s_svg.empty())
          write_text_file(s_svg,
                          svg::stacked_area_chart(series, "Category shares"));
      } else {
        std::cerr << "unknown metric '" << s_metric << "'\n";
        return 2;
      }
      return 0;
    }

    if (*nm) {
      ActivityMatrix a = read_matrix_csv(n_in);
      NmfOptions opts;
      opts.tol = n_tol;
      opts.max_iter = n_max_iter;
      opts.seed = n_seed;
      FactorModel fm = nmf(a, n_k, opts);
      save_factor_model(fm, a.row_keys, a.col_labels, n_out);
      std::cout << "k=" << n_k << " iterations=" << fm.iterations
                << " final_objective=" << csv::format_double(fm.final_objective())
                << "\n";
      return 0;
    }

    if (*cp) {
      ActivityTensor t;
      if (!c_tensor_csv.empty()) {
        // Sparse triples to dense tensor.
        std::ifstream in(c_tensor_csv);
        if (!in) throw std::runtime_error("cannot read " + c_tensor_csv);
        std::string line;
        std::vector<std::array<std::string, 3>> keys;
        std::vector<double> vals;
        std::set<std::string> users_s, times_s, cats_s;
        bool header = true;
        while (csv::getline_norm(in, line)) {
          if (line.empty()) continue;
          auto f = csv::split_record(line);
          if (header && f.size() == 4 && f[0] == "user_id") {
            header = false;
            continue;
          }
          header = false;
          if (f.size() != 4)
            throw std::runtime_error("tensor CSV needs 4 columns");
          auto v = csv::parse_double(f[3]);
          if (!v || *v < 0)
            throw std::runtime_error("bad tensor count '" + f[3] + "'");
          keys.push_back({f[0], f[1], f[2]});
          vals.push_back(*v);
          users_s.insert(f[0]);
          times_s.insert(f[1]);
          cats_s.insert(f[2]);
        }
        t.user_keys.assign(users_s.begin(), users_s.end());
        t.time_labels.assign(times_s.begin(), times_s.end());
        t.category_labels.assign(cats_s.begin(), cats_s.end());
        t.resize(t.user_keys.size(), t.time_labels.size(),
                 t.category_labels.size());
        auto index_of = [](const std::vector<std::string>& v,
                           const std::string& s) {
          return std::lower_bound(v.begin(), v.end(), s) - v.begin();
        };
        for (std::size_t i = 0; i < keys.size(); ++i)
          t.at(index_of(t.user_keys, keys[i][0]),
               index_of(t.time_labels, keys[i][1]),
               index_of(t.category_labels, keys[i][2])) += vals[i];
        t.provenance = "sparse csv " + c_tensor_csv;
      } else if (!c_in.empty()) {
        IngestReport rep;
        Dataset ds = load_dataset_dir(c_in, rep);
        t = build_tensor(ds,
                         c_time_mode == "dow7" ? TensorTimeMode::dow7
                                               : TensorTimeMode::hour24,
                         c_top_p, c_prune_h);
      } else {
        std::cerr << "cp: need --in or --tensor-csv\n";
        return 2;
      }
      CpOptions opts;
      opts.tol = c_tol;
      opts.relative_tol = c_rel_tol;
      opts.max_iter = c_max_iter;
      opts.init = c_init == "svd" || c_init == "singular_vector"
                      ? CpInit::singular_vector
                      : CpInit::random;
      opts.seed = c_seed;
      TensorFactorModel tm = cp_als(t, c_k, opts);
      save_tensor_model(tm, t, c_out);
      std::cout << "k=" << c_k << " sweeps=" << tm.iterations
                << " final_error=" << csv::format_double(tm.final_error())
                << "\n";
      return 0;
    }

    if (*lf) {
      IngestReport rep;
      Dataset ds = load_dataset_dir(l_in, rep);
      fs::create_directories(l_out);
      ClusterOptions co;
      co.n_clusters = l_clusters;
      co.restarts = l_restarts;
      co.seed = stream_seed(l_seed, "clusters");
      co.normalize_rows = l_norm_rows;
      int cap = env_thread_cap();
      co.threads = cap > 0 ? cap : 1;

      auto emit_groups = [&](const Eigen::MatrixXd& w,
                             const std::vector<std::string>& keys, int k) {
        auto gp = group_preferences(w, keys, ds, Grouping::city_gender);
        std::ofstream out(fs::path(l_out) / "group_means.csv");
        std::vector<std::string> hdr{"city", "gender", "size"};
        for (int j = 0; j < k; ++j)
          hdr.push_back("component_" + std::to_string(j));
        out << csv::join_record(hdr) << "\n";
        for (const auto& g : gp.groups) {
          std::vector<std::string> rec{g.key.city, to_string(g.key.gender),
                                       std::to_string(g.size)};
          for (double v : g.mean) rec.push_back(csv::format_double(v));
          out << csv::join_record(rec) << "\n";
        }
        for (const auto& w_msg : gp.warnings) std::cerr << w_msg << "\n";
      };
      auto emit_clusters = [&](const Eigen::MatrixXd& w,
                               const std::vector<std::string>& keys) {
        if (static_cast<int>(w.rows()) < co.n_clusters) return;
        auto lc = cluster_preferences(w, keys, ds, co);
        json j;
        j["wcss"] = lc.wcss;
        json centers = json::array();
        for (Eigen::Index c = 0; c < lc.centers.rows(); ++c) {
          json row = json::array();
          for (Eigen::Index q = 0; q < lc.centers.cols(); ++q)
            row.push_back(lc.centers(c, q));
          centers.push_back(row);
        }
        j["centers"] = centers;
        json comp = json::array();
        for (std::size_t c = 0; c < lc.composition.size(); ++c) {
          json groups = json::array();
          for (const auto& [key, share] : lc.composition[c])
            groups.push_back({{"city", key.city},
                              {"gender", to_string(key.gender)},
                              {"share", share}});
          comp.push_back({{"cluster", c}, {"groups", groups}});
        }
        j["composition"] = comp;
        write_text_file((fs::path(l_out) / "clusters.json").string(),
                        j.dump(2) + "\n");
      };

      if (l_mode == "temporal") {
        int k = l_k > 0 ? l_k : 3;
        ActivityMatrix a = build_temporal_matrix(ds, parse_days(l_days));
        NmfOptions opts{l_tol, l_max_iter, stream_seed(l_seed, "nmf")};
        FactorModel fm = nmf(a, k, opts);
        save_factor_model(fm, a.row_keys, a.col_labels, l_out);
        emit_groups(fm.W, a.row_keys, k);
        emit_clusters(fm.W, a.row_keys);
        json ranges = json::array();
        for (int j = 0; j < k; ++j) {
          std::vector<double> profile(24);
          for (int h = 0; h < 24; ++h) profile[h] = fm.L(j, h);
          json rj;
          rj["component"] = j;
          bool all_zero = std::all_of(profile.begin(), profile.end(),
                                      [](double v) { return v == 0.0; });
          if (all_zero) {
            rj["error"] = "all-zero profile";
          } else {
            TimeRanges r = extract_time_ranges(profile);
            rj["get_up"] = {r.get_up.start, r.get_up.end};
            rj["most_active"] = {r.most_active.start, r.most_active.end};
            rj["go_to_bed"] = {r.go_to_bed.start, r.go_to_bed.end};
          }
          ranges.push_back(rj);
        }
        write_text_file((fs::path(l_out) / "time_ranges.json").string(),
                        ranges.dump(2) + "\n");
        if (l_svg)
          write_text_file((fs::path(l_out) / "profiles.svg").string(),
                          svg::line_chart(fm.L, {}, a.col_labels,
                                          "Temporal lifestyles"));
      } else if (l_mode == "spatial") {
        int k = l_k > 0 ? l_k : 10;
        auto cats = categories_by_count(ds);
        ActivityMatrix a = build_spatial_matrix(ds, cats);
        NmfOptions opts{l_tol, l_max_iter, stream_seed(l_seed, "nmf")};
        FactorModel fm = nmf(a, k, opts);
        save_factor_model(fm, a.row_keys, a.col_labels, l_out);
        emit_groups(fm.W, a.row_keys, k);
        emit_clusters(fm.W, a.row_keys);
      } else if (l_mode == "tensor-hour" || l_mode == "tensor-dow") {
        bool hourly = l_mode == "tensor-hour";
        int k = l_k > 0 ? l_k : (hourly ? 12 : 5);
        ActivityTensor t = build_tensor(
            ds, hourly ? TensorTimeMode::hour24 : TensorTimeMode::dow7);
        CpOptions opts;
        opts.tol = l_tol;
        opts.max_iter = l_max_iter;
        opts.seed = stream_seed(l_seed, "cp");
        TensorFactorModel tm = cp_als(t, k, opts);
        save_tensor_model(tm, t, l_out);
        emit_groups(tm.W, t.user_keys, k);
        emit_clusters(tm.W, t.user_keys);
        if (l_svg)
          write_text_file((fs::path(l_out) / "L_M_minmax.svg").string(),
                          svg::line_chart(minmax_normalize_rows(tm.L_M), {},
                                          t.time_labels, "Component weights"));
      } else {
        std::cerr << "unknown mode '" << l_mode << "'\n";
        return 2;
      }
      return 0;
    }

    if (*sy) {
      synth::SynthSpec spec = synth::SynthSpec::from_json_file(y_spec);
      if (y_seed_set) spec.seed = y_seed;
      auto sd = synth::generate_dataset(spec);
      write_dataset_dir(sd.ds, y_out);
      std::cout << "users: " << sd.ds.users.size()
                << " venues: " << sd.ds.venues.size()
                << " checkins: " << sd.ds.checkins.size() << "\n";
      return 0;
    }

    if (*rn) {
      PipelineConfig cfg = PipelineConfig::from_json_file(r_config);
      if (!r_out_override.empty()) cfg.out_dir = r_out_override;
      if (r_seed_set) cfg.seed = r_seed;
      if (r_svg) cfg.emit_svg = true;
      if (int cap = env_thread_cap(); cap > 0)
        cfg.threads = std::min(cfg.threads, cap);
      if (r_deterministic) cfg.threads = 1;
      PipelineResult res = run_pipeline(cfg);
      if (res.exit_code != 0) {
        std::cerr << "pipeline failed at stage '" << res.failed_stage
                  << "': " << res.message << "\n";
      } else {
        std::cout << "report written to " << cfg.out_dir << "\n";
      }
      return res.exit_code;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
