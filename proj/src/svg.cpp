#include "lifemine/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lifemine::svg {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                          "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
                          "#9c755f", "#bab0ac", "#1f77b4", "#d62728"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Canvas {
  std::ostringstream os;

  Canvas(const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
       << "\" height=\"" << kHeight << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">"
       << esc(title) << "</text>\n";
  }

  double px(double frac) const {
    return kMarginLeft + frac * (kWidth - kMarginLeft - kMarginRight);
  }
  double py(double frac) const {
    return kHeight - kMarginBottom -
           frac * (kHeight - kMarginTop - kMarginBottom);
  }

  void axis_labels(const std::string& x_lo, const std::string& x_hi,
                   const std::string& y_lo, const std::string& y_hi) {
    os << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(py(0)) << "\" x2=\""
       << num(px(1)) << "\" y2=\"" << num(py(0))
       << "\" stroke=\"black\"/>\n<line x1=\"" << num(px(0)) << "\" y1=\""
       << num(py(0)) << "\" x2=\"" << num(px(0)) << "\" y2=\"" << num(py(1))
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(0)) << "\" y=\"" << kHeight - kMarginBottom + 18
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(x_lo)
       << "</text>\n";
    os << "<text x=\"" << num(px(1)) << "\" y=\"" << kHeight - kMarginBottom + 18
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << esc(x_hi) << "</text>\n";
    os << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << num(py(0))
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << esc(y_lo) << "</text>\n";
    os << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << num(py(1) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << esc(y_hi) << "</text>\n";
  }

  void legend(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      double y = kMarginTop + 14.0 * i;
      os << "<rect x=\"" << kWidth - 190 << "\" y=\"" << num(y - 9)
         << "\" width=\"10\" height=\"10\" fill=\""
         << kPalette[i % std::size(kPalette)] << "\"/>\n<text x=\""
         << kWidth - 176 << "\" y=\"" << num(y)
         << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(names[i])
         << "</text>\n";
    }
  }

  std::string finish() {
    os << "</svg>\n";
    return os.str();
  }
};

}  // namespace

std::string stacked_area_chart(const ShareSeries& series,
                               const std::string& title) {
  Canvas c(title);
  const std::size_t nb = series.bucket_labels.size();
  if (nb >= 2 && !series.categories.empty()) {
    std::vector<double> base(nb, 0.0);
    for (std::size_t s = 0; s < series.categories.size(); ++s) {
      std::ostringstream path;
      for (std::size_t b = 0; b < nb; ++b) {
        double x = c.px(double(b) / double(nb - 1));
        double y = c.py(std::min(1.0, base[b] + series.shares[s][b]));
        path << (b == 0 ? "M" : "L") << num(x) << " " << num(y) << " ";
      }
      for (std::size_t b = nb; b-- > 0;) {
        double x = c.px(double(b) / double(nb - 1));
        double y = c.py(std::min(1.0, base[b]));
        path << "L" << num(x) << " " << num(y) << " ";
      }
      c.os << "<path d=\"" << path.str() << "Z\" fill=\""
           << kPalette[s % std::size(kPalette)] << "\" fill-opacity=\"0.85\"/>\n";
      for (std::size_t b = 0; b < nb; ++b) base[b] += series.shares[s][b];
    }
  }
  c.axis_labels(nb ? series.bucket_labels.front() : "",
                nb ? series.bucket_labels.back() : "", "0", "1");
  c.legend(series.categories);
  return c.finish();
}

std::string box_plot(const std::vector<BoxStats>& stats,
                     const std::string& title) {
  Canvas c(title);
  double hi = 1.0;
  for (const auto& b : stats) hi = std::max(hi, b.max);
  const std::size_t n = stats.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = stats[i];
    double xc = c.px((i + 0.5) / double(std::max<std::size_t>(n, 1)));
    double half = 0.3 * (c.px(1.0 / double(std::max<std::size_t>(n, 1))) - c.px(0));
    auto y = [&](double v) { return c.py(v / hi); };
    c.os << "<line x1=\"" << num(xc) << "\" y1=\"" << num(y(b.min))
         << "\" x2=\"" << num(xc) << "\" y2=\"" << num(y(b.max))
         << "\" stroke=\"black\"/>\n";
    c.os << "<rect x=\"" << num(xc - half) << "\" y=\"" << num(y(b.q3))
         << "\" width=\"" << num(2 * half) << "\" height=\""
         << num(y(b.q1) - y(b.q3)) << "\" fill=\""
         << kPalette[i % std::size(kPalette)]
         << "\" fill-opacity=\"0.6\" stroke=\"black\"/>\n";
    c.os << "<line x1=\"" << num(xc - half) << "\" y1=\"" << num(y(b.median))
         << "\" x2=\"" << num(xc + half) << "\" y2=\"" << num(y(b.median))
         << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    c.os << "<text x=\"" << num(xc) << "\" y=\"" << kHeight - kMarginBottom + 18
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"10\">"
         << esc(b.category.substr(0, 12)) << "</text>\n";
  }
  c.axis_labels("", "", "0", num(hi));
  return c.finish();
}

std::string ccdf_loglog(const std::vector<std::pair<std::uint64_t, double>>& pts,
                        const std::string& title) {
  Canvas c(title);
  if (!pts.empty()) {
    double xmax = std::log10(std::max<double>(pts.back().first, 2));
    double ymin = std::log10(std::max(pts.back().second, 1e-6));
    std::ostringstream path;
    bool first = true;
    for (const auto& [v, p] : pts) {
      double xf = xmax > 0 ? std::log10(std::max<double>(v, 1)) / xmax : 0.0;
      double yf = ymin < 0 ? 1.0 - std::log10(std::max(p, 1e-6)) / ymin : 1.0;
      path << (first ? "M" : "L") << num(c.px(xf)) << " "
           << num(c.py(1.0 - yf)) << " ";
      first = false;
    }
    c.os << "<path d=\"" << path.str()
         << "\" fill=\"none\" stroke=\"#4e79a7\" stroke-width=\"2\"/>\n";
    c.axis_labels("1", num(std::pow(10, xmax)), num(std::pow(10, ymin)), "1");
  }
  return c.finish();
}

std::string line_chart(const Eigen::MatrixXd& rows,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& x_labels,
                       const std::string& title) {
  Canvas c(title);
  const Eigen::Index nb = rows.cols();
  double hi = rows.size() ? std::max(rows.maxCoeff(), 1e-12) : 1.0;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    std::ostringstream path;
    for (Eigen::Index b = 0; b < nb; ++b) {
      double x = c.px(nb > 1 ? double(b) / double(nb - 1) : 0.5);
      double y = c.py(rows(r, b) / hi);
      path << (b == 0 ? "M" : "L") << num(x) << " " << num(y) << " ";
    }
    c.os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\""
         << kPalette[r % std::size(kPalette)] << "\" stroke-width=\"2\"/>\n";
  }
  c.axis_labels(x_labels.empty() ? "" : x_labels.front(),
                x_labels.empty() ? "" : x_labels.back(), "0", num(hi));
  c.legend(row_names);
  return c.finish();
}

}  // namespace lifemine::svg
