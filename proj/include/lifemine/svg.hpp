#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lifemine/stats.hpp"

namespace lifemine::svg {

// Static, dependency-free SVG renderings of the standard report charts.
// Deterministic output: coordinates are formatted with fixed precision.

std::string stacked_area_chart(const ShareSeries& series,
                               const std::string& title);

std::string box_plot(const std::vector<BoxStats>& stats,
                     const std::string& title);

std::string ccdf_loglog(const std::vector<std::pair<std::uint64_t, double>>& pts,
                        const std::string& title);

// One polyline per matrix row (e.g. lifestyle profiles over hours).
std::string line_chart(const Eigen::MatrixXd& rows,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& x_labels,
                       const std::string& title);

}  // namespace lifemine::svg
