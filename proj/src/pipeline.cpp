#include "lifemine/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lifemine/csv.hpp"
#include "lifemine/rng.hpp"
#include "lifemine/stats.hpp"
#include "lifemine/svg.hpp"

namespace lifemine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

CpInit parse_init(const std::string& s) {
  if (s == "random") return CpInit::random;
  if (s == "svd" || s == "singular_vector") return CpInit::singular_vector;
  throw ConfigError("bad init '" + s + "' (random|svd)");
}

PipelineConfig::NmfStage nmf_stage_from_json(const json& j,
                                             PipelineConfig::NmfStage base,
                                             const std::string& where) {
  reject_unknown(j, {"k", "tol", "max_iter"}, where);
  if (j.contains("k")) base.k = j["k"].get<int>();
  if (j.contains("tol")) base.tol = j["tol"].get<double>();
  if (j.contains("max_iter")) base.max_iter = j["max_iter"].get<int>();
  return base;
}

PipelineConfig::TensorStage tensor_stage_from_json(
    const json& j, PipelineConfig::TensorStage base, const std::string& where) {
  reject_unknown(j,
                 {"enabled", "k", "tol", "relative_tol", "max_iter", "init",
                  "top_p", "prune_h"},
                 where);
  if (j.contains("enabled")) base.enabled = j["enabled"].get<bool>();
  if (j.contains("k")) base.k = j["k"].get<int>();
  if (j.contains("tol")) base.tol = j["tol"].get<double>();
  if (j.contains("relative_tol")) base.relative_tol = j["relative_tol"].get<bool>();
  if (j.contains("max_iter")) base.max_iter = j["max_iter"].get<int>();
  if (j.contains("init")) base.init = parse_init(j["init"].get<std::string>());
  if (j.contains("top_p")) base.top_p = j["top_p"].get<int>();
  if (j.contains("prune_h")) base.prune_h = j["prune_h"].get<int>();
  return base;
}

json nmf_stage_to_json(const PipelineConfig::NmfStage& s) {
  return json{{"k", s.k}, {"tol", s.tol}, {"max_iter", s.max_iter}};
}

json tensor_stage_to_json(const PipelineConfig::TensorStage& s) {
  return json{{"enabled", s.enabled},
              {"k", s.k},
              {"tol", s.tol},
              {"relative_tol", s.relative_tol},
              {"max_iter", s.max_iter},
              {"init", s.init == CpInit::random ? "random" : "svd"},
              {"top_p", s.top_p},
              {"prune_h", s.prune_h}};
}

}  // namespace

void PipelineConfig::validate() const {
  if (out_dir.empty()) throw ConfigError("out_dir is required");
  int inputs = (!dataset_dir.empty() ? 1 : 0) +
               (!synth_spec_path.empty() || !synth_spec_inline.empty() ? 1 : 0);
  if (inputs != 1)
    throw ConfigError("input must name exactly one of dataset_dir/synth_spec");
  try {
    preprocess.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (stats_top_n < 1) throw ConfigError("stats.top_n must be >= 1");
  for (const auto* s : {&temporal, &spatial}) {
    if (s->k < 1) throw ConfigError("nmf k must be >= 1");
    if (s->max_iter < 1) throw ConfigError("nmf max_iter must be >= 1");
    if (!(s->tol >= 0.0)) throw ConfigError("nmf tol must be >= 0");
  }
  for (const auto* s : {&tensor_hour, &tensor_dow}) {
    if (!s->enabled) continue;
    if (s->k < 2) throw ConfigError("tensor k must be >= 2");
    if (s->top_p < 1 || s->prune_h < 0)
      throw ConfigError("tensor top_p/prune_h out of range");
  }
  if (clusters.n_clusters < 1) throw ConfigError("clusters.n must be >= 1");
  if (clusters.restarts < 1) throw ConfigError("clusters.restarts must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (j.contains("config") && j["config"].is_object())
    j = j["config"];  // run manifest: re-run from the echoed config

  PipelineConfig cfg;
  reject_unknown(j,
                 {"seed", "out_dir", "input", "preprocess", "stats", "temporal",
                  "spatial", "tensor_hour", "tensor_dow", "clusters",
                  "emit_svg", "threads"},
                 "config");
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("input")) {
    const auto& in = j["input"];
    reject_unknown(in, {"dataset_dir", "synth_spec", "synth_spec_inline"},
                   "input");
    if (in.contains("dataset_dir"))
      cfg.dataset_dir = in["dataset_dir"].get<std::string>();
    if (in.contains("synth_spec"))
      cfg.synth_spec_path = in["synth_spec"].get<std::string>();
    if (in.contains("synth_spec_inline"))
      cfg.synth_spec_inline = in["synth_spec_inline"].dump();
  }
  if (j.contains("preprocess")) {
    const auto& p = j["preprocess"];
    reject_unknown(
        p, {"radius_m", "min_span_days", "min_checkins", "extend_before_filters"},
        "preprocess");
    if (p.contains("radius_m"))
      cfg.preprocess.radius_m = p["radius_m"].get<double>();
    if (p.contains("min_span_days"))
      cfg.preprocess.min_span_days = p["min_span_days"].get<int>();
    if (p.contains("min_checkins"))
      cfg.preprocess.min_checkins = p["min_checkins"].get<int>();
    if (p.contains("extend_before_filters"))
      cfg.extend_before_filters = p["extend_before_filters"].get<bool>();
  }
  if (j.contains("stats")) {
    const auto& s = j["stats"];
    reject_unknown(s, {"top_n", "dedupe_categories"}, "stats");
    if (s.contains("top_n")) cfg.stats_top_n = s["top_n"].get<int>();
    if (s.contains("dedupe_categories"))
      cfg.stats_dedupe = s["dedupe_categories"].get<bool>();
  }
  if (j.contains("temporal"))
    cfg.temporal = nmf_stage_from_json(j["temporal"], cfg.temporal, "temporal");
  if (j.contains("spatial"))
    cfg.spatial = nmf_stage_from_json(j["spatial"], cfg.spatial, "spatial");
  if (j.contains("tensor_hour"))
    cfg.tensor_hour =
        tensor_stage_from_json(j["tensor_hour"], cfg.tensor_hour, "tensor_hour");
  if (j.contains("tensor_dow"))
    cfg.tensor_dow =
        tensor_stage_from_json(j["tensor_dow"], cfg.tensor_dow, "tensor_dow");
  if (j.contains("clusters")) {
    const auto& c = j["clusters"];
    reject_unknown(c, {"n", "restarts", "normalize_rows", "max_iter"},
                   "clusters");
    if (c.contains("n")) cfg.clusters.n_clusters = c["n"].get<int>();
    if (c.contains("restarts")) cfg.clusters.restarts = c["restarts"].get<int>();
    if (c.contains("normalize_rows"))
      cfg.clusters.normalize_rows = c["normalize_rows"].get<bool>();
    if (c.contains("max_iter")) cfg.clusters.max_iter = c["max_iter"].get<int>();
  }
  if (j.contains("emit_svg")) cfg.emit_svg = j["emit_svg"].get<bool>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string PipelineConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  json in;
  if (!dataset_dir.empty()) in["dataset_dir"] = dataset_dir;
  if (!synth_spec_path.empty()) in["synth_spec"] = synth_spec_path;
  if (!synth_spec_inline.empty())
    in["synth_spec_inline"] = json::parse(synth_spec_inline);
  j["input"] = in;
  j["preprocess"] = {{"radius_m", preprocess.radius_m},
                     {"min_span_days", preprocess.min_span_days},
                     {"min_checkins", preprocess.min_checkins},
                     {"extend_before_filters", extend_before_filters}};
  j["stats"] = {{"top_n", stats_top_n}, {"dedupe_categories", stats_dedupe}};
  j["temporal"] = nmf_stage_to_json(temporal);
  j["spatial"] = nmf_stage_to_json(spatial);
  j["tensor_hour"] = tensor_stage_to_json(tensor_hour);
  j["tensor_dow"] = tensor_stage_to_json(tensor_dow);
  j["clusters"] = {{"n", clusters.n_clusters},
                   {"restarts", clusters.restarts},
                   {"normalize_rows", clusters.normalize_rows},
                   {"max_iter", clusters.max_iter}};
  j["emit_svg"] = emit_svg;
  j["threads"] = threads;
  return j.dump(2);
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_visit_stats_csv(const fs::path& path,
                           const std::vector<VisitStats>& stats) {
  std::ofstream out(path);
  out << "venue_id,visits,unique_visitors,visiting_frequency\n";
  for (const auto& s : stats)
    out << csv::join_record({s.venue_id, std::to_string(s.visits),
                             std::to_string(s.unique_visitors),
                             csv::format_double(s.visiting_frequency)})
        << "\n";
}

void write_box_stats_csv(const fs::path& path,
                         const std::vector<BoxStats>& stats) {
  std::ofstream out(path);
  out << "category,n,min,q1,median,q3,max\n";
  for (const auto& b : stats)
    out << csv::join_record({b.category, std::to_string(b.n),
                             csv::format_double(b.min), csv::format_double(b.q1),
                             csv::format_double(b.median),
                             csv::format_double(b.q3),
                             csv::format_double(b.max)})
        << "\n";
}

void write_ccdf_csv(const fs::path& path,
                    const std::vector<std::pair<std::uint64_t, double>>& pts) {
  std::ofstream out(path);
  out << "threshold,probability\n";
  for (const auto& [v, p] : pts)
    out << v << "," << csv::format_double(p) << "\n";
}

void write_share_series_csv(const fs::path& path, const ShareSeries& s) {
  std::ofstream out(path);
  std::vector<std::string> hdr{"bucket", "bucket_total"};
  hdr.insert(hdr.end(), s.categories.begin(), s.categories.end());
  out << csv::join_record(hdr) << "\n";
  for (std::size_t b = 0; b < s.bucket_labels.size(); ++b) {
    std::vector<std::string> rec{s.bucket_labels[b],
                                 csv::format_double(s.bucket_totals[b])};
    for (std::size_t c = 0; c < s.categories.size(); ++c)
      rec.push_back(csv::format_double(s.shares[c][b]));
    out << csv::join_record(rec) << "\n";
  }
}

void write_group_means_csv(const fs::path& path, const GroupPreferences& gp,
                           int k) {
  std::ofstream out(path);
  std::vector<std::string> hdr{"city", "gender", "size"};
  for (int j = 0; j < k; ++j) hdr.push_back("component_" + std::to_string(j));
  out << csv::join_record(hdr) << "\n";
  for (const auto& g : gp.groups) {
    std::vector<std::string> rec{g.key.city, to_string(g.key.gender),
                                 std::to_string(g.size)};
    for (double v : g.mean) rec.push_back(csv::format_double(v));
    out << csv::join_record(rec) << "\n";
  }
}

json time_ranges_to_json(const TimeRanges& r) {
  return json{{"get_up", {r.get_up.start, r.get_up.end}},
              {"most_active", {r.most_active.start, r.most_active.end}},
              {"go_to_bed", {r.go_to_bed.start, r.go_to_bed.end}},
              {"anchor_hour", r.anchor_hour},
              {"fractions", {r.fractions[0], r.fractions[1], r.fractions[2]}}};
}

json clusters_to_json(const LifestyleClusters& lc,
                      const std::vector<std::string>& row_keys) {
  json j;
  json centers = json::array();
  for (Eigen::Index c = 0; c < lc.centers.rows(); ++c) {
    json row = json::array();
    for (Eigen::Index k = 0; k < lc.centers.cols(); ++k)
      row.push_back(lc.centers(c, k));
    centers.push_back(row);
  }
  j["centers"] = centers;
  j["wcss"] = lc.wcss;
  json assign;
  for (std::size_t i = 0; i < row_keys.size(); ++i)
    assign[row_keys[i]] = lc.assignments[i];
  j["assignments"] = assign;
  json comp = json::array();
  for (std::size_t c = 0; c < lc.composition.size(); ++c) {
    json groups = json::array();
    for (const auto& [key, share] : lc.composition[c]) {
      std::size_t members = 0;
      auto it = lc.member_counts[c].find(key);
      if (it != lc.member_counts[c].end()) members = it->second;
      groups.push_back({{"city", key.city},
                        {"gender", to_string(key.gender)},
                        {"share", share},
                        {"members", members}});
    }
    comp.push_back({{"cluster", c}, {"groups", groups}});
  }
  j["composition"] = comp;
  return j;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineResult res;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.message = e.what();
    return res;
  }

  fs::path out(cfg.out_dir);
  std::string stage = "setup";
  json manifest;
  manifest["tool"] = "lifemine";
  manifest["version"] = "0.1.0";
  manifest["seed"] = cfg.seed;
  manifest["config"] = json::parse(cfg.to_json_text());
  json stages = json::array();

  try {
    fs::create_directories(out);

    // --- input ---------------------------------------------------------
    stage = "ingest";
    Dataset ds;
    IngestReport ingest_report;
    if (!cfg.dataset_dir.empty()) {
      ds = load_dataset_dir(cfg.dataset_dir, ingest_report);
    } else {
      synth::SynthSpec spec =
          !cfg.synth_spec_path.empty()
              ? synth::SynthSpec::from_json_file(cfg.synth_spec_path)
              : synth::SynthSpec::from_json_text(cfg.synth_spec_inline);
      spec.seed = stream_seed(cfg.seed, "synth");
      ds = synth::generate_dataset(spec).ds;
    }
    {
      json sj;
      sj["stage"] = "ingest";
      sj["checkins"] = ds.checkins.size();
      sj["users"] = ds.users.size();
      sj["venues"] = ds.venues.size();
      sj["rows_rejected"] = ingest_report.rejected();
      stages.push_back(sj);
    }

    // --- preprocess ------------------------------------------------------
    stage = "preprocess";
    Dataset pre = ds;
    if (cfg.extend_before_filters)
      pre = extend_checkins(pre, cfg.preprocess);
    pre = filter_tourists(pre, cfg.preprocess.min_span_days);
    pre = filter_low_activity(pre, cfg.preprocess.min_checkins);
    if (!cfg.extend_before_filters)
      pre = extend_checkins(pre, cfg.preprocess);
    write_dataset_dir(pre, (out / "preprocessed").string());
    {
      json sj;
      sj["stage"] = "preprocess";
      sj["checkins"] = pre.checkins.size();
      sj["users"] = pre.users.size();
      stages.push_back(sj);
    }

    // --- stats -----------------------------------------------------------
    stage = "stats";
    fs::create_directories(out / "stats");
    auto vstats = visiting_frequency(pre);
    write_visit_stats_csv(out / "stats" / "visit_frequency.csv", vstats);
    write_box_stats_csv(out / "stats" / "category_box_stats.csv",
                        category_box_stats(vstats, pre));
    std::vector<std::uint64_t> venue_counts;
    for (const auto& s : vstats) venue_counts.push_back(s.visits);
    auto cc = ccdf(venue_counts);
    write_ccdf_csv(out / "stats" / "ccdf.csv", cc);
    ShareOptions so;
    so.top_n = cfg.stats_top_n;
    so.dedupe_subsumed = cfg.stats_dedupe;
    so.day_filter = DayFilter::weekday;
    auto shares_wd = share_series(pre, Bucketing::hour24, so);
    write_share_series_csv(out / "stats" / "shares_hour_weekday.csv", shares_wd);
    so.day_filter = DayFilter::weekend;
    auto shares_we = share_series(pre, Bucketing::hour24, so);
    write_share_series_csv(out / "stats" / "shares_hour_weekend.csv", shares_we);
    so.day_filter = DayFilter::all;
    write_share_series_csv(out / "stats" / "shares_month.csv",
                           share_series(pre, Bucketing::month12, so));
    if (cfg.emit_svg) {
      write_text(out / "stats" / "shares_hour_weekday.svg",
                 svg::stacked_area_chart(shares_wd, "Category shares, weekdays"));
      write_text(out / "stats" / "shares_hour_weekend.svg",
                 svg::stacked_area_chart(shares_we, "Category shares, weekends"));
      write_text(out / "stats" / "ccdf.svg",
                 svg::ccdf_loglog(cc, "Check-ins per venue CCDF"));
      write_text(out / "stats" / "category_box_stats.svg",
                 svg::box_plot(category_box_stats(vstats, pre),
                               "Visiting frequency by category"));
    }
    stages.push_back(json{{"stage", "stats"}, {"venues", vstats.size()}});

    // --- temporal NMF ----------------------------------------------------
    stage = "nmf_temporal";
    json time_ranges;
    for (auto day_class : {DayFilter::weekday, DayFilter::weekend}) {
      std::string name =
          day_class == DayFilter::weekday ? "weekday" : "weekend";
      ActivityMatrix a = build_temporal_matrix(pre, day_class);
      NmfOptions no;
      no.tol = cfg.temporal.tol;
      no.max_iter = cfg.temporal.max_iter;
      no.seed = stream_seed(cfg.seed, "nmf/" + name);
      FactorModel fm = nmf(a, cfg.temporal.k, no);
      save_factor_model(fm, a.row_keys, a.col_labels,
                        (out / ("nmf_" + name)).string());
      auto gp = group_preferences(fm.W, a.row_keys, pre, Grouping::city_gender);
      write_group_means_csv(out / ("nmf_" + name) / "group_means.csv", gp,
                            cfg.temporal.k);
      json ranges = json::array();
      for (int j = 0; j < cfg.temporal.k; ++j) {
        std::vector<double> profile(24);
        for (int h = 0; h < 24; ++h) profile[h] = fm.L(j, h);
        bool all_zero = std::all_of(profile.begin(), profile.end(),
                                    [](double v) { return v == 0.0; });
        json rj;
        rj["component"] = j;
        if (all_zero) {
          rj["error"] = "all-zero profile";
        } else {
          rj.update(time_ranges_to_json(extract_time_ranges(profile)));
        }
        ranges.push_back(rj);
      }
      time_ranges[name] = ranges;
      if (cfg.emit_svg)
        write_text(out / ("nmf_" + name) / "profiles.svg",
                   svg::line_chart(fm.L, {}, a.col_labels,
                                   "Temporal lifestyles, " + name));
      stages.push_back(json{{"stage", "nmf_" + name},
                            {"k", cfg.temporal.k},
                            {"iterations", fm.iterations},
                            {"final_objective", fm.final_objective()}});
    }
    write_text(out / "time_ranges.json", time_ranges.dump(2) + "\n");

    // --- spatial NMF + clustering ---------------------------------------
    stage = "nmf_spatial";
    auto cats = categories_by_count(pre);
    ActivityMatrix sa = build_spatial_matrix(pre, cats);
    {
      NmfOptions no;
      no.tol = cfg.spatial.tol;
      no.max_iter = cfg.spatial.max_iter;
      no.seed = stream_seed(cfg.seed, "nmf/spatial");
      int max_k = static_cast<int>(std::min(sa.values.rows(), sa.values.cols()));
      int k = std::min(cfg.spatial.k, max_k);
      FactorModel fm = nmf(sa, k, no);
      save_factor_model(fm, sa.row_keys, sa.col_labels,
                        (out / "nmf_spatial").string());
      auto gp = group_preferences(fm.W, sa.row_keys, pre, Grouping::city_gender);
      write_group_means_csv(out / "nmf_spatial" / "group_means.csv", gp, k);
      stages.push_back(json{{"stage", "nmf_spatial"},
                            {"k", k},
                            {"iterations", fm.iterations},
                            {"final_objective", fm.final_objective()}});

      stage = "clusters";
      ClusterOptions co = cfg.clusters;
      co.seed = stream_seed(cfg.seed, "clusters");
      co.threads = cfg.threads;
      co.n_clusters = std::min(co.n_clusters, static_cast<int>(fm.W.rows()));
      auto lc = cluster_preferences(fm.W, sa.row_keys, pre, co);
      write_text(out / "clusters.json",
                 clusters_to_json(lc, sa.row_keys).dump(2) + "\n");
      stages.push_back(json{{"stage", "clusters"},
                            {"n_clusters", co.n_clusters},
                            {"wcss", lc.wcss}});
    }

    // --- tensors ---------------------------------------------------------
    for (const auto* ts : {&cfg.tensor_hour, &cfg.tensor_dow}) {
      if (!ts->enabled) continue;
      bool hourly = ts == &cfg.tensor_hour;
      stage = hourly ? "cp_hour24" : "cp_dow7";
      ActivityTensor t = build_tensor(
          pre, hourly ? TensorTimeMode::hour24 : TensorTimeMode::dow7,
          ts->top_p, ts->prune_h);
      CpOptions co;
      co.tol = ts->tol;
      co.relative_tol = ts->relative_tol;
      co.max_iter = ts->max_iter;
      co.init = ts->init;
      co.seed = stream_seed(cfg.seed, stage);
      TensorFactorModel tm = cp_als(t, ts->k, co);
      save_tensor_model(tm, t, (out / stage).string());
      if (cfg.emit_svg)
        write_text(out / stage / "L_M_minmax.svg",
                   svg::line_chart(minmax_normalize_rows(tm.L_M), {},
                                   t.time_labels, "Component weights, " + stage));
      stages.push_back(json{{"stage", stage},
                            {"k", ts->k},
                            {"iterations", tm.iterations},
                            {"final_error", tm.final_error()}});
    }

    stage = "manifest";
    manifest["stages"] = stages;
    write_text(out / "run_manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    res.exit_code = 1;
    res.failed_stage = stage;
    res.message = e.what();
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream marker(out / "FAILED");
    marker << "stage: " << stage << "\n" << e.what() << "\n";
    return res;
  }
  return res;
}

}  // namespace lifemine
