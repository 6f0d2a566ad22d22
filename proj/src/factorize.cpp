#include "lifemine/factorize.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "lifemine/csv.hpp"
#include "lifemine/rng.hpp"

namespace lifemine {

namespace fs = std::filesystem;
using nlohmann::json;

void ActivityMatrix::validate() const {
  if (static_cast<std::size_t>(values.rows()) != row_keys.size() ||
      static_cast<std::size_t>(values.cols()) != col_labels.size())
    throw std::invalid_argument("matrix shape does not match labels");
  std::set<std::string> rk(row_keys.begin(), row_keys.end());
  if (rk.size() != row_keys.size())
    throw std::invalid_argument("duplicate row keys");
  std::set<std::string> cl(col_labels.begin(), col_labels.end());
  if (cl.size() != col_labels.size())
    throw std::invalid_argument("duplicate column labels");
  if ((values.array() < 0.0).any())
    throw std::invalid_argument("matrix has negative entries");
}

double frobenius_norm(const Eigen::MatrixXd& x) { return x.norm(); }

double frobenius_norm(const ActivityTensor& t) {
  double s = 0.0;
  for (double v : t.values) s += v * v;
  return std::sqrt(s);
}

namespace {

constexpr double kDenomGuard = 1e-12;

double nmf_objective(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w,
                     const Eigen::MatrixXd& l) {
  return 0.5 * (a - w * l).squaredNorm();
}

}  // namespace

FactorModel nmf(const ActivityMatrix& a, int k, const NmfOptions& opts) {
  const auto n = a.values.rows();
  const auto m = a.values.cols();
  if (k < 1 || k > std::min(n, m))
    throw std::invalid_argument("nmf: k out of range [1, min(N,M)]");
  if ((a.values.array() < 0.0).any())
    throw std::invalid_argument("nmf: input has negative entries");

  FactorModel model;
  model.k = k;
  model.tol = opts.tol;
  model.seed = opts.seed;

  if (a.values.isZero(0.0)) {
    model.W = Eigen::MatrixXd::Zero(n, k);
    model.L = Eigen::MatrixXd::Zero(k, m);
    model.objective_trace = {0.0};
    model.iterations = 0;
    return model;
  }

  // Entrywise uniform(0,1] scaled so W*L starts at the data's magnitude.
  Rng rng(opts.seed);
  const double scale = std::sqrt(a.values.mean() / static_cast<double>(k));
  Eigen::MatrixXd w(n, k), l(k, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) w(i, j) = scale * rng.uniform_pos();
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < m; ++j) l(i, j) = scale * rng.uniform_pos();

  model.objective_trace.push_back(nmf_objective(a.values, w, l));
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    // W <- W .* (A L^T) ./ (W L L^T)
    {
      Eigen::MatrixXd num = a.values * l.transpose();
      Eigen::MatrixXd den = w * (l * l.transpose());
      w = (w.array() * num.array() / (den.array() + kDenomGuard)).matrix();
    }
    // L <- L .* (W^T A) ./ (W^T W L)
    {
      Eigen::MatrixXd num = w.transpose() * a.values;
      Eigen::MatrixXd den = (w.transpose() * w) * l;
      l = (l.array() * num.array() / (den.array() + kDenomGuard)).matrix();
    }
    double obj = nmf_objective(a.values, w, l);
    double prev = model.objective_trace.back();
    model.objective_trace.push_back(obj);
    double rel = prev > 0.0 ? (prev - obj) / prev : 0.0;
    if (rel < opts.tol) {
      ++it;
      break;
    }
  }
  model.iterations = it;

  // Components sorted by descending column norm of W for stable reporting.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> norms(k);
  for (int j = 0; j < k; ++j) norms[j] = w.col(j).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return norms[x] > norms[y]; });
  model.W.resize(n, k);
  model.L.resize(k, m);
  for (int j = 0; j < k; ++j) {
    model.W.col(j) = w.col(order[j]);
    model.L.row(j) = l.row(order[j]);
  }
  return model;
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("khatri_rao: column counts differ");
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index n = 0; n < b.rows(); ++n)
        out(i * b.rows() + n, j) = a(i, j) * b(n, j);
  return out;
}

Eigen::MatrixXd mode_unfold(const ActivityTensor& t, int mode) {
  const auto n = static_cast<Eigen::Index>(t.n);
  const auto m = static_cast<Eigen::Index>(t.m);
  const auto p = static_cast<Eigen::Index>(t.p);
  Eigen::MatrixXd out;
  switch (mode) {
    case 0:
      out.resize(n, m * p);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          for (Eigen::Index q = 0; q < p; ++q)
            out(i, j * p + q) = t.at(i, j, q);
      break;
    case 1:
      out.resize(m, n * p);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          for (Eigen::Index q = 0; q < p; ++q)
            out(j, i * p + q) = t.at(i, j, q);
      break;
    case 2:
      out.resize(p, n * m);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          for (Eigen::Index q = 0; q < p; ++q)
            out(q, i * m + j) = t.at(i, j, q);
      break;
    default:
      throw std::invalid_argument("mode_unfold: mode must be 0, 1 or 2");
  }
  return out;
}

ActivityTensor tensor_from_factors(const Eigen::MatrixXd& w,
                                   const Eigen::MatrixXd& l_m,
                                   const Eigen::MatrixXd& l_p) {
  if (w.cols() != l_m.rows() || w.cols() != l_p.rows())
    throw std::invalid_argument("tensor_from_factors: rank mismatch");
  ActivityTensor t;
  t.resize(w.rows(), l_m.cols(), l_p.cols());
  for (std::size_t i = 0; i < t.n; ++i)
    for (std::size_t j = 0; j < t.m; ++j)
      for (std::size_t q = 0; q < t.p; ++q) {
        double s = 0.0;
        for (Eigen::Index r = 0; r < w.cols(); ++r)
          s += w(i, r) * l_m(r, j) * l_p(r, q);
        t.at(i, j, q) = s;
      }
  return t;
}

namespace {

// Solve X * G = B for X given symmetric G, falling back to a pseudo-inverse
// when G is rank deficient.
Eigen::MatrixXd solve_normal_eq(const Eigen::MatrixXd& b,
                                const Eigen::MatrixXd& g) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cutoff = sv.size() ? 1e-10 * sv(0) : 0.0;
  Eigen::VectorXd inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  Eigen::MatrixXd ginv =
      svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return b * ginv;
}

double cp_error(const ActivityTensor& t, const Eigen::MatrixXd& w,
                const Eigen::MatrixXd& u1, const Eigen::MatrixXd& u2) {
  // ||T - That||_F via the mode-0 unfolding.
  const auto m = static_cast<Eigen::Index>(t.m);
  const auto p = static_cast<Eigen::Index>(t.p);
  double s = 0.0;
  Eigen::MatrixXd kr = khatri_rao(u1, u2);  // (M*P) x k
  for (std::size_t i = 0; i < t.n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index q = 0; q < p; ++q) {
        double approx = w.row(i).dot(kr.row(j * p + q));
        double d = t.at(i, j, q) - approx;
        s += d * d;
      }
  }
  return std::sqrt(s);
}

// Leading k left singular vectors of a mode unfolding, absolute values.
Eigen::MatrixXd svd_init_factor(const ActivityTensor& t, int mode, int k) {
  Eigen::MatrixXd unf = mode_unfold(t, mode);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(unf, Eigen::ComputeThinU);
  Eigen::MatrixXd u = svd.matrixU().leftCols(k).cwiseAbs();
  return u;
}

}  // namespace

TensorFactorModel cp_als(const ActivityTensor& t, int k,
                         const CpOptions& opts) {
  const auto n = static_cast<Eigen::Index>(t.n);
  const auto m = static_cast<Eigen::Index>(t.m);
  const auto p = static_cast<Eigen::Index>(t.p);
  const auto min_dim = std::min({n, m, p});
  if (k < 2 || k > min_dim)
    throw std::invalid_argument("cp_als: k out of range [2, min(N,M,P)]");

  TensorFactorModel model;
  model.k = k;
  model.tol = opts.tol;
  model.seed = opts.seed;
  model.init_mode = opts.init;

  bool all_zero =
      std::all_of(t.values.begin(), t.values.end(), [](double v) { return v == 0.0; });
  if (all_zero) {
    model.W = Eigen::MatrixXd::Zero(n, k);
    model.L_M = Eigen::MatrixXd::Zero(k, m);
    model.L_P = Eigen::MatrixXd::Zero(k, p);
    model.fit_trace = {0.0};
    model.iterations = 0;
    return model;
  }

  // Factors kept in column orientation during the sweeps: W (N x k),
  // U1 (M x k), U2 (P x k).
  Eigen::MatrixXd w(n, k), u1(m, k), u2(p, k);
  if (opts.init == CpInit::random) {
    Rng rng(opts.seed);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) w(i, j) = rng.uniform_pos();
    for (Eigen::Index i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j) u1(i, j) = rng.uniform_pos();
    for (Eigen::Index i = 0; i < p; ++i)
      for (int j = 0; j < k; ++j) u2(i, j) = rng.uniform_pos();
  } else {
    w = svd_init_factor(t, 0, k);
    u1 = svd_init_factor(t, 1, k);
    u2 = svd_init_factor(t, 2, k);
  }

  Eigen::MatrixXd unf0 = mode_unfold(t, 0);
  Eigen::MatrixXd unf1 = mode_unfold(t, 1);
  Eigen::MatrixXd unf2 = mode_unfold(t, 2);

  model.fit_trace.push_back(cp_error(t, w, u1, u2));
  int sweeps = 0;
  for (; sweeps < opts.max_iter; ++sweeps) {
    // L_P from (W, L_M), then W, then L_M.
    {
      Eigen::MatrixXd g = (w.transpose() * w).array() *
                          (u1.transpose() * u1).array();
      u2 = solve_normal_eq(unf2 * khatri_rao(w, u1), g);
    }
    {
      Eigen::MatrixXd g = (u1.transpose() * u1).array() *
                          (u2.transpose() * u2).array();
      w = solve_normal_eq(unf0 * khatri_rao(u1, u2), g);
    }
    {
      Eigen::MatrixXd g = (w.transpose() * w).array() *
                          (u2.transpose() * u2).array();
      u1 = solve_normal_eq(unf1 * khatri_rao(w, u2), g);
      // Rebalance: push the column scales of L_M and L_P into W.
      for (int j = 0; j < k; ++j) {
        double s1 = u1.col(j).norm();
        double s2 = u2.col(j).norm();
        if (s1 > 0.0) u1.col(j) /= s1;
        if (s2 > 0.0) u2.col(j) /= s2;
        w.col(j) *= s1 * s2;
      }
    }
    double err = cp_error(t, w, u1, u2);
    double prev = model.fit_trace.back();
    model.fit_trace.push_back(err);
    double impr = prev - err;
    if (opts.relative_tol && prev > 0.0) impr /= prev;
    if (impr < opts.tol) {
      ++sweeps;
      break;
    }
  }
  model.iterations = sweeps;

  // Sort components by descending column norm of W.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> norms(k);
  for (int j = 0; j < k; ++j) norms[j] = w.col(j).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return norms[x] > norms[y]; });
  model.W.resize(n, k);
  model.L_M.resize(k, m);
  model.L_P.resize(k, p);
  for (int j = 0; j < k; ++j) {
    model.W.col(j) = w.col(order[j]);
    model.L_M.row(j) = u1.col(order[j]).transpose();
    model.L_P.row(j) = u2.col(order[j]).transpose();
  }
  return model;
}

Eigen::MatrixXd minmax_normalize_rows(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double lo = x.row(i).minCoeff();
    double hi = x.row(i).maxCoeff();
    if (hi > lo)
      out.row(i) = (x.row(i).array() - lo) / (hi - lo);
    else
      out.row(i).setZero();
  }
  return out;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& row_keys,
                      const std::vector<std::string>& col_labels) {
  if (static_cast<std::size_t>(values.rows()) != row_keys.size() ||
      static_cast<std::size_t>(values.cols()) != col_labels.size())
    throw std::invalid_argument("write_matrix_csv: shape mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<std::string> hdr{"row_key"};
  hdr.insert(hdr.end(), col_labels.begin(), col_labels.end());
  out << csv::join_record(hdr) << "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    std::vector<std::string> rec{row_keys[i]};
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      rec.push_back(csv::format_double(values(i, j)));
    out << csv::join_record(rec) << "\n";
  }
}

ActivityMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!csv::getline_norm(in, line))
    throw std::runtime_error("empty matrix file " + path);
  auto hdr = csv::split_record(line);
  if (hdr.size() < 2 || hdr[0] != "row_key")
    throw std::runtime_error("bad matrix header in " + path);
  ActivityMatrix a;
  a.col_labels.assign(hdr.begin() + 1, hdr.end());
  std::vector<std::vector<double>> rows;
  while (csv::getline_norm(in, line)) {
    if (line.empty()) continue;
    auto f = csv::split_record(line);
    if (f.size() != hdr.size())
      throw std::runtime_error("ragged matrix row in " + path);
    a.row_keys.push_back(f[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < f.size(); ++j) {
      auto v = csv::parse_double(f[j]);
      if (!v) throw std::runtime_error("bad number '" + f[j] + "' in " + path);
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  a.values.resize(rows.size(), a.col_labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < a.col_labels.size(); ++j)
      a.values(i, j) = rows[i][j];
  a.validate();
  return a;
}

namespace {

std::vector<std::string> component_labels(int k) {
  std::vector<std::string> out;
  for (int j = 0; j < k; ++j) out.push_back("component_" + std::to_string(j));
  return out;
}

}  // namespace

void save_factor_model(const FactorModel& model,
                       const std::vector<std::string>& row_keys,
                       const std::vector<std::string>& col_labels,
                       const std::string& dir) {
  fs::create_directories(dir);
  write_matrix_csv((fs::path(dir) / "W.csv").string(), model.W, row_keys,
                   component_labels(model.k));
  write_matrix_csv((fs::path(dir) / "L.csv").string(), model.L,
                   component_labels(model.k), col_labels);
  json meta;
  meta["k"] = model.k;
  meta["tol"] = model.tol;
  meta["seed"] = model.seed;
  meta["iterations"] = model.iterations;
  meta["final_objective"] = model.final_objective();
  std::ofstream out(fs::path(dir) / "meta.json");
  out << meta.dump(2) << "\n";
}

void save_tensor_model(const TensorFactorModel& model, const ActivityTensor& t,
                       const std::string& dir) {
  fs::create_directories(dir);
  auto comp = component_labels(model.k);
  write_matrix_csv((fs::path(dir) / "W.csv").string(), model.W, t.user_keys,
                   comp);
  write_matrix_csv((fs::path(dir) / "L_M.csv").string(), model.L_M, comp,
                   t.time_labels);
  write_matrix_csv((fs::path(dir) / "L_P.csv").string(), model.L_P, comp,
                   t.category_labels);
  write_matrix_csv((fs::path(dir) / "L_M_minmax.csv").string(),
                   minmax_normalize_rows(model.L_M), comp, t.time_labels);
  write_matrix_csv((fs::path(dir) / "L_P_minmax.csv").string(),
                   minmax_normalize_rows(model.L_P), comp, t.category_labels);
  json meta;
  meta["k"] = model.k;
  meta["tol"] = model.tol;
  meta["seed"] = model.seed;
  meta["iterations"] = model.iterations;
  meta["final_error"] = model.final_error();
  meta["init"] =
      model.init_mode == CpInit::random ? "random" : "singular_vector";
  meta["tensor_provenance"] = t.provenance;
  std::ofstream out(fs::path(dir) / "meta.json");
  out << meta.dump(2) << "\n";
}

}  // namespace lifemine
