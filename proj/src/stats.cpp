#include "lifemine/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace lifemine {

std::vector<VisitStats> visiting_frequency(const Dataset& ds) {
  std::map<std::string, std::pair<std::uint64_t, std::set<std::string>>> acc;
  for (const auto& c : ds.checkins) {
    if (!c.has_venue()) continue;
    auto& e = acc[c.venue_id];
    ++e.first;
    e.second.insert(c.user_id);
  }
  std::vector<VisitStats> out;
  out.reserve(acc.size());
  for (const auto& [vid, e] : acc) {
    VisitStats s;
    s.venue_id = vid;
    s.visits = e.first;
    s.unique_visitors = e.second.size();
    s.visiting_frequency =
        static_cast<double>(s.visits) / static_cast<double>(s.unique_visitors);
    out.push_back(std::move(s));
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted[0];
  double pos = p * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::vector<BoxStats> category_box_stats(const std::vector<VisitStats>& stats,
                                         const Dataset& ds) {
  std::map<std::string, std::vector<double>> per_cat;
  for (const auto& s : stats) {
    const Venue* v = ds.find_venue(s.venue_id);
    if (!v) continue;
    for (const auto& cat : v->categories)
      per_cat[cat].push_back(s.visiting_frequency);
  }
  std::vector<BoxStats> out;
  for (auto& [cat, freqs] : per_cat) {
    std::sort(freqs.begin(), freqs.end());
    BoxStats b;
    b.category = cat;
    b.n = freqs.size();
    b.min = freqs.front();
    b.max = freqs.back();
    b.q1 = quantile_sorted(freqs, 0.25);
    b.median = quantile_sorted(freqs, 0.50);
    b.q3 = quantile_sorted(freqs, 0.75);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::pair<std::uint64_t, double>> ccdf(
    const std::vector<std::uint64_t>& counts) {
  std::vector<std::pair<std::uint64_t, double>> out;
  if (counts.empty()) return out;
  std::vector<std::uint64_t> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::uint64_t v = sorted[i];
    // fraction of entries >= v
    out.emplace_back(v, static_cast<double>(sorted.size() - i) / n);
    while (i < sorted.size() && sorted[i] == v) ++i;
  }
  return out;
}

bool is_suffix_token(const std::string& inner, const std::string& outer) {
  if (inner == outer) return true;
  if (inner.size() >= outer.size()) return false;
  if (outer.compare(outer.size() - inner.size(), inner.size(), inner) != 0)
    return false;
  return outer[outer.size() - inner.size() - 1] == ' ';
}

std::vector<std::string> bucket_labels(Bucketing b) {
  std::vector<std::string> out;
  switch (b) {
    case Bucketing::hour24:
      for (int h = 0; h < 24; ++h) out.push_back(std::to_string(h));
      break;
    case Bucketing::dow7:
      out = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
      break;
    case Bucketing::month12:
      for (int m = 1; m <= 12; ++m) out.push_back(std::to_string(m));
      break;
  }
  return out;
}

int bucket_count(Bucketing b) {
  switch (b) {
    case Bucketing::hour24: return 24;
    case Bucketing::dow7: return 7;
    default: return 12;
  }
}

int bucket_of(const CivilDateTime& t, Bucketing b) {
  switch (b) {
    case Bucketing::hour24: return t.hour;
    case Bucketing::dow7: return t.day_of_week();
    default: return t.month - 1;
  }
}

bool passes_day_filter(const CivilDateTime& t, DayFilter f) {
  switch (f) {
    case DayFilter::all: return true;
    case DayFilter::weekday: return !t.is_weekend();
    default: return t.is_weekend();
  }
}

ShareSeries share_series(const Dataset& ds, Bucketing bucketing,
                         const ShareOptions& opts) {
  const int nb = bucket_count(bucketing);
  // Total check-ins per category under the filter, and contributions per
  // (category, bucket).
  std::map<std::string, std::uint64_t> totals;
  std::map<std::string, std::vector<std::uint64_t>> per_bucket;
  std::vector<double> bucket_totals(nb, 0.0);
  for (const auto& c : ds.checkins) {
    if (!passes_day_filter(c.timestamp, opts.day_filter)) continue;
    int bk = bucket_of(c.timestamp, bucketing);
    for (const auto& cat : c.categories) {
      ++totals[cat];
      auto [it, fresh] = per_bucket.emplace(cat, std::vector<std::uint64_t>());
      if (fresh) it->second.assign(nb, 0);
      ++it->second[bk];
      bucket_totals[bk] += 1.0;
    }
  }
  // Rank by total desc, name asc for determinism.
  std::vector<std::pair<std::string, std::uint64_t>> ranked(totals.begin(),
                                                            totals.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  ShareSeries out;
  out.bucketing = bucketing;
  out.bucket_labels = bucket_labels(bucketing);
  out.bucket_totals = bucket_totals;
  for (const auto& [cat, n] : ranked) {
    if (static_cast<int>(out.categories.size()) >= opts.top_n) break;
    if (opts.dedupe_subsumed) {
      bool dup = std::any_of(
          out.categories.begin(), out.categories.end(), [&](const auto& sel) {
            return is_suffix_token(cat, sel) || is_suffix_token(sel, cat);
          });
      if (dup) continue;
    }
    out.categories.push_back(cat);
  }
  for (const auto& cat : out.categories) {
    const auto& counts = per_bucket[cat];
    std::vector<double> shares(nb, 0.0);
    for (int b = 0; b < nb; ++b)
      if (bucket_totals[b] > 0.0)
        shares[b] = static_cast<double>(counts[b]) / bucket_totals[b];
    out.shares.push_back(std::move(shares));
  }
  return out;
}

}  // namespace lifemine
