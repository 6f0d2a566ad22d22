#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lifemine {

// User x dimension count matrix; dimensions are hours of day or POI
// categories.
struct ActivityMatrix {
  Eigen::MatrixXd values;              // N x M, entries >= 0
  std::vector<std::string> row_keys;   // user ids, unique
  std::vector<std::string> col_labels;

  std::size_t n() const { return row_keys.size(); }
  std::size_t m() const { return col_labels.size(); }
  void validate() const;  // shapes, uniqueness, non-negativity
};

// A ~ W L with W >= 0 (N x k user preferences) and L >= 0 (k x M lifestyles).
struct FactorModel {
  Eigen::MatrixXd W;
  Eigen::MatrixXd L;
  int k = 0;
  std::vector<double> objective_trace;  // 0.5*||A - WL||_F^2, index 0 = init
  double tol = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;

  double final_objective() const {
    return objective_trace.empty() ? 0.0 : objective_trace.back();
  }
};

// Dense N x M x P count tensor, row-major: (n,m,p) -> (n*M + m)*P + p.
struct ActivityTensor {
  std::vector<double> values;
  std::size_t n = 0, m = 0, p = 0;
  std::vector<std::string> user_keys;
  std::vector<std::string> time_labels;
  std::vector<std::string> category_labels;
  std::string provenance;  // build parameters (prune threshold etc.)

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values[(i * m + j) * p + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * m + j) * p + k];
  }
  void resize(std::size_t ni, std::size_t mi, std::size_t pi) {
    n = ni;
    m = mi;
    p = pi;
    values.assign(n * m * p, 0.0);
  }
};

enum class CpInit { random, singular_vector };

// T ~ sum_j W(:,j) o L_M(j,:) o L_P(j,:). Factors are unconstrained.
struct TensorFactorModel {
  Eigen::MatrixXd W;    // N x k
  Eigen::MatrixXd L_M;  // k x M
  Eigen::MatrixXd L_P;  // k x P
  int k = 0;
  std::vector<double> fit_trace;  // ||T - That||_F per sweep, index 0 = init
  double tol = 0.0;
  std::uint64_t seed = 0;
  CpInit init_mode = CpInit::random;
  int iterations = 0;

  double final_error() const {
    return fit_trace.empty() ? 0.0 : fit_trace.back();
  }
};

double frobenius_norm(const Eigen::MatrixXd& x);
double frobenius_norm(const ActivityTensor& t);

struct NmfOptions {
  double tol = 1e-5;       // relative objective improvement
  int max_iter = 500;
  std::uint64_t seed = 0;
};

// Multiplicative updates for min 0.5*||A - WL||_F^2 s.t. W,L >= 0.
// Deterministic given the seed; the trace never increases.
FactorModel nmf(const ActivityMatrix& a, int k, const NmfOptions& opts);

// Column-wise Kronecker product: for A (M x K) and B (N x K), the result is
// MN x K with row (i*N + n) = A(i,j)*B(n,j).
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Mode-n matricization consistent with khatri_rao ordering, so that
// unfold(T,0) = W * khatri_rao(L_M^T, L_P^T)^T holds exactly for a tensor
// built from factors (and the analogous identities for modes 1 and 2).
Eigen::MatrixXd mode_unfold(const ActivityTensor& t, int mode);

ActivityTensor tensor_from_factors(const Eigen::MatrixXd& w,
                                   const Eigen::MatrixXd& l_m,
                                   const Eigen::MatrixXd& l_p);

struct CpOptions {
  double tol = 1e-5;        // error improvement between sweeps
  bool relative_tol = false;
  int max_iter = 200;
  CpInit init = CpInit::random;
  std::uint64_t seed = 0;
};

// Alternating least squares via the Khatri-Rao normal equations; each sweep
// updates L_P from (W, L_M), then W, then L_M. Rank-deficient normal
// equations fall back to a pseudo-inverse with cutoff 1e-10 * sigma_max.
TensorFactorModel cp_als(const ActivityTensor& t, int k, const CpOptions& opts);

// Maps each row to [0,1] via (x - min)/(max - min); constant rows map to 0.
Eigen::MatrixXd minmax_normalize_rows(const Eigen::MatrixXd& x);

// --- matrix / model file formats -------------------------------------------

// Matrix CSV: header "row_key,<label>,...", one row per row_key.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& row_keys,
                      const std::vector<std::string>& col_labels);
ActivityMatrix read_matrix_csv(const std::string& path);

// Factor model directory: W.csv, L.csv, meta.json.
void save_factor_model(const FactorModel& model,
                       const std::vector<std::string>& row_keys,
                       const std::vector<std::string>& col_labels,
                       const std::string& dir);

// Tensor model directory: W.csv, L_M.csv, L_P.csv, meta.json plus min-max
// normalized copies of the mode factors.
void save_tensor_model(const TensorFactorModel& model,
                       const ActivityTensor& t, const std::string& dir);

}  // namespace lifemine
