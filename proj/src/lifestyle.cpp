#include "lifemine/lifestyle.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "lifemine/rng.hpp"

namespace lifemine {

namespace {

// (city, user_id) ordering so W splits into contiguous city blocks.
std::vector<const UserProfile*> ordered_users(const Dataset& ds) {
  std::vector<const UserProfile*> out;
  out.reserve(ds.users.size());
  for (const auto& u : ds.users) out.push_back(&u);
  std::sort(out.begin(), out.end(),
            [](const UserProfile* a, const UserProfile* b) {
              if (a->city != b->city) return a->city < b->city;
              return a->user_id < b->user_id;
            });
  return out;
}

std::map<std::string, std::size_t> row_of(
    const std::vector<const UserProfile*>& users) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < users.size(); ++i)
    out.emplace(users[i]->user_id, i);
  return out;
}

}  // namespace

ActivityMatrix build_temporal_matrix(const Dataset& ds, DayFilter day_class) {
  auto users = ordered_users(ds);
  auto rows = row_of(users);
  ActivityMatrix a;
  for (const auto* u : users) a.row_keys.push_back(u->user_id);
  a.col_labels = bucket_labels(Bucketing::hour24);
  a.values = Eigen::MatrixXd::Zero(users.size(), 24);
  for (const auto& c : ds.checkins) {
    if (!passes_day_filter(c.timestamp, day_class)) continue;
    auto it = rows.find(c.user_id);
    if (it == rows.end()) continue;
    a.values(it->second, c.timestamp.hour) += 1.0;
  }
  return a;
}

ActivityMatrix build_spatial_matrix(
    const Dataset& ds, const std::vector<std::string>& categories) {
  auto users = ordered_users(ds);
  auto rows = row_of(users);
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < categories.size(); ++j)
    col.emplace(categories[j], j);
  ActivityMatrix a;
  for (const auto* u : users) a.row_keys.push_back(u->user_id);
  a.col_labels = categories;
  a.values = Eigen::MatrixXd::Zero(users.size(), categories.size());
  for (const auto& c : ds.checkins) {
    auto it = rows.find(c.user_id);
    if (it == rows.end()) continue;
    for (const auto& cat : c.categories) {
      auto jt = col.find(cat);
      if (jt != col.end()) a.values(it->second, jt->second) += 1.0;
    }
  }
  return a;
}

std::vector<std::string> categories_by_count(const Dataset& ds) {
  std::map<std::string, std::uint64_t> totals;
  for (const auto& c : ds.checkins)
    for (const auto& cat : c.categories) ++totals[cat];
  std::vector<std::pair<std::string, std::uint64_t>> ranked(totals.begin(),
                                                            totals.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (auto& [cat, n] : ranked) out.push_back(cat);
  return out;
}

ActivityTensor build_tensor(const Dataset& ds, TensorTimeMode time_mode,
                            int top_p, int prune_h) {
  std::map<std::string, std::uint64_t> user_totals;
  for (const auto& c : ds.checkins) ++user_totals[c.user_id];

  auto cats = categories_by_count(ds);
  bool short_of_top_p = static_cast<int>(cats.size()) < top_p;
  if (static_cast<int>(cats.size()) > top_p) cats.resize(top_p);

  auto users = ordered_users(ds);
  std::vector<const UserProfile*> kept;
  for (const auto* u : users) {
    auto it = user_totals.find(u->user_id);
    if (it != user_totals.end() &&
        it->second >= static_cast<std::uint64_t>(prune_h))
      kept.push_back(u);
  }

  ActivityTensor t;
  t.m = time_mode == TensorTimeMode::hour24 ? 24 : 7;
  t.time_labels = bucket_labels(
      time_mode == TensorTimeMode::hour24 ? Bucketing::hour24 : Bucketing::dow7);
  t.category_labels = cats;
  for (const auto* u : kept) t.user_keys.push_back(u->user_id);
  t.resize(kept.size(), t.m, cats.size());
  t.provenance = "prune_h=" + std::to_string(prune_h) +
                 " top_p=" + std::to_string(top_p);
  if (short_of_top_p) {
    t.provenance += " (only " + std::to_string(cats.size()) +
                    " categories available; using all)";
    std::cerr << "build_tensor: only " << cats.size()
              << " categories available, top_p=" << top_p << "\n";
  }

  std::map<std::string, std::size_t> rows;
  for (std::size_t i = 0; i < kept.size(); ++i)
    rows.emplace(kept[i]->user_id, i);
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < cats.size(); ++j) col.emplace(cats[j], j);

  for (const auto& c : ds.checkins) {
    auto it = rows.find(c.user_id);
    if (it == rows.end()) continue;
    int bk = time_mode == TensorTimeMode::hour24
                 ? c.timestamp.hour
                 : c.timestamp.day_of_week();
    for (const auto& cat : c.categories) {
      auto jt = col.find(cat);
      if (jt != col.end()) t.at(it->second, bk, jt->second) += 1.0;
    }
  }
  return t;
}

GroupPreferences group_preferences(const Eigen::MatrixXd& w,
                                   const std::vector<std::string>& row_keys,
                                   const Dataset& ds, Grouping grouping) {
  if (static_cast<std::size_t>(w.rows()) != row_keys.size())
    throw std::invalid_argument("group_preferences: W rows != row keys");
  auto key_of = [&](const UserProfile* u) {
    GroupKey key;
    key.city = u ? u->city : "unknown";
    key.gender =
        grouping == Grouping::city_gender && u ? u->gender : Gender::unknown;
    return key;
  };
  // Candidate groups come from the registry, so a group whose members were
  // all pruned from W still surfaces as a warning.
  std::map<GroupKey, std::pair<Eigen::VectorXd, std::size_t>> acc;
  for (const auto& u : ds.users)
    acc.emplace(key_of(&u),
                std::make_pair(Eigen::VectorXd::Zero(w.cols()).eval(), 0));
  for (std::size_t i = 0; i < row_keys.size(); ++i) {
    const UserProfile* u = ds.find_user(row_keys[i]);
    auto [it, fresh] = acc.emplace(
        key_of(u), std::make_pair(Eigen::VectorXd::Zero(w.cols()).eval(), 0));
    it->second.first += w.row(i).transpose();
    ++it->second.second;
  }
  GroupPreferences out;
  for (auto& [key, e] : acc) {
    if (e.second == 0) {
      out.warnings.push_back("empty group omitted: " + key.label());
      continue;
    }
    GroupPreference g;
    g.key = key;
    g.size = e.second;
    Eigen::VectorXd mean = e.first / static_cast<double>(e.second);
    g.mean.assign(mean.data(), mean.data() + mean.size());
    out.groups.push_back(std::move(g));
  }
  return out;
}

TimeRanges extract_time_ranges(const std::vector<double>& profile) {
  if (profile.size() != 24)
    throw std::invalid_argument("extract_time_ranges: profile must have 24 hours");
  double total = 0.0;
  for (double v : profile) {
    if (v < 0.0)
      throw std::invalid_argument("extract_time_ranges: negative mass");
    total += v;
  }
  if (total <= 0.0)
    throw std::invalid_argument("extract_time_ranges: all-zero profile");

  TimeRanges r;
  const int anchor = r.anchor_hour;
  auto hour_at = [&](int step) { return (anchor + step) % 24; };

  int first_support = -1, last_support = -1;
  for (int s = 0; s < 24; ++s) {
    if (profile[hour_at(s)] > 0.0) {
      if (first_support < 0) first_support = s;
      last_support = s;
    }
  }

  // >= comparisons with a tiny guard so exact boundary masses land on the
  // intended hour.
  const double t1 = r.fractions[0] * total * (1.0 - 1e-12);
  const double t2 = (r.fractions[0] + r.fractions[1]) * total * (1.0 - 1e-12);
  double cum = 0.0;
  int get_up_end = -1, most_active_end = -1;
  for (int s = 0; s < 24; ++s) {
    cum += profile[hour_at(s)];
    if (get_up_end < 0 && cum >= t1) get_up_end = s;
    if (most_active_end < 0 && cum >= t2) {
      most_active_end = s;
      break;
    }
  }

  auto next_support = [&](int after) {
    for (int s = after + 1; s < 24; ++s)
      if (profile[hour_at(s)] > 0.0) return s;
    return after;  // degenerate: no support left
  };

  r.get_up = {hour_at(first_support), hour_at(get_up_end)};
  int ma_start = most_active_end > get_up_end ? next_support(get_up_end)
                                              : most_active_end;
  r.most_active = {hour_at(ma_start), hour_at(most_active_end)};
  int gtb_start = last_support > most_active_end ? next_support(most_active_end)
                                                 : last_support;
  r.go_to_bed = {hour_at(gtb_start), hour_at(last_support)};
  return r;
}

namespace {

struct KmeansRun {
  Eigen::MatrixXd centers;
  std::vector<int> assignments;
  double wcss = std::numeric_limits<double>::infinity();
};

double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  return (a - b).squaredNorm();
}

KmeansRun kmeans_once(const Eigen::MatrixXd& x, int k, std::uint64_t seed,
                      int max_iter) {
  const Eigen::Index n = x.rows();
  Rng rng(seed);
  KmeansRun run;
  run.centers.resize(k, x.cols());

  // k-means++ seeding.
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_index(n));
  run.centers.row(0) = x.row(first);
  for (int c = 1; c < k; ++c) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      mind[i] = std::min(mind[i], sq_dist(x.row(i), run.centers.row(c - 1)));
      sum += mind[i];
    }
    Eigen::Index pick = 0;
    if (sum > 0.0) {
      double target = rng.uniform() * sum;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += mind[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(n));
    }
    run.centers.row(c) = x.row(pick);
  }

  run.assignments.assign(n, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    // Assign.
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(x.row(i), run.centers.row(0));
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(x.row(i), run.centers.row(c));
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (run.assignments[i] != best) {
        run.assignments[i] = best;
        changed = true;
      }
    }
    // Update.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.assignments[i]) += x.row(i);
      ++counts[run.assignments[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        run.centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // Re-seed an empty cluster with the point farthest from its center.
        Eigen::Index far = 0;
        double fd = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double d = sq_dist(x.row(i), run.centers.row(run.assignments[i]));
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        run.centers.row(c) = x.row(far);
        changed = true;
      }
    }
    if (!changed && it > 0) break;
  }
  run.wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    run.wcss += sq_dist(x.row(i), run.centers.row(run.assignments[i]));
  return run;
}

}  // namespace

LifestyleClusters cluster_preferences(const Eigen::MatrixXd& w,
                                      const std::vector<std::string>& row_keys,
                                      const Dataset& ds,
                                      const ClusterOptions& opts) {
  if (w.rows() == 0)
    throw std::invalid_argument("cluster_preferences: empty W");
  if (opts.n_clusters < 1 || opts.n_clusters > w.rows())
    throw std::invalid_argument("cluster_preferences: n_clusters > N");
  if (static_cast<std::size_t>(w.rows()) != row_keys.size())
    throw std::invalid_argument("cluster_preferences: W rows != row keys");

  Eigen::MatrixXd x = w;
  if (opts.normalize_rows) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double s = x.row(i).lpNorm<1>();
      if (s > 0.0) x.row(i) /= s;
    }
  }

  const int restarts = std::max(1, opts.restarts);
  std::vector<KmeansRun> runs(restarts);
  auto work = [&](int r) {
    runs[r] = kmeans_once(x, opts.n_clusters,
                          stream_seed(opts.seed, "kmeans/" + std::to_string(r)),
                          opts.max_iter);
  };
  int threads = std::min(std::max(1, opts.threads), restarts);
  if (threads <= 1) {
    for (int r = 0; r < restarts; ++r) work(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        for (int r = next.fetch_add(1); r < restarts; r = next.fetch_add(1))
          work(r);
      });
    for (auto& th : pool) th.join();
  }
  int best = 0;
  for (int r = 1; r < restarts; ++r)
    if (runs[r].wcss < runs[best].wcss) best = r;  // tie -> lowest index

  LifestyleClusters out;
  out.centers = runs[best].centers;
  out.assignments = runs[best].assignments;
  out.wcss = runs[best].wcss;

  // City sizes over the clustered population.
  std::map<std::string, std::size_t> city_sizes;
  std::vector<GroupKey> keys(row_keys.size());
  for (std::size_t i = 0; i < row_keys.size(); ++i) {
    const UserProfile* u = ds.find_user(row_keys[i]);
    keys[i].city = u ? u->city : "unknown";
    keys[i].gender = u ? u->gender : Gender::unknown;
    ++city_sizes[keys[i].city];
  }
  out.composition.resize(opts.n_clusters);
  out.member_counts.resize(opts.n_clusters);
  for (std::size_t i = 0; i < row_keys.size(); ++i) {
    int c = out.assignments[i];
    double weight = 1.0 / static_cast<double>(city_sizes[keys[i].city]);
    out.composition[c][keys[i]] += weight;
    ++out.member_counts[c][keys[i]];
  }
  for (auto& comp : out.composition) {
    double sum = 0.0;
    for (const auto& [key, v] : comp) sum += v;
    if (sum > 0.0)
      for (auto& [key, v] : comp) v /= sum;
  }
  return out;
}

}  // namespace lifemine
