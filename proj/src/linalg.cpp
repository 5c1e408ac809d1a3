#include "flexfem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flexfem::linalg {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// CsrMatrix

CsrMatrix::CsrMatrix(std::size_t n_rows, std::size_t n_cols,
                     std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> columns,
                     std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      offsets_(std::move(row_offsets)),
      cols_(std::move(columns)),
      values_(std::move(values)) {
  if (offsets_.size() != n_rows_ + 1 || offsets_.front() != 0 ||
      offsets_.back() != cols_.size() || cols_.size() != values_.size())
    throw Error("inconsistent CSR arrays");
  for (std::size_t r = 0; r < n_rows_; ++r) {
    if (offsets_[r] > offsets_[r + 1]) throw Error("CSR row offsets not monotone");
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (cols_[k] >= n_cols_) throw Error("CSR column index out of range");
      if (k > offsets_[r] && cols_[k] <= cols_[k - 1])
        throw Error("CSR columns must be strictly increasing within a row");
    }
  }
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1), cols(n);
  std::iota(offsets.begin(), offsets.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  return CsrMatrix(n, n, std::move(offsets), std::move(cols),
                   std::vector<double>(n, 1.0));
}

CsrMatrix CsrMatrix::from_dense(std::size_t n_rows, std::size_t n_cols,
                                std::span<const double> a) {
  if (a.size() != n_rows * n_cols) throw Error("dense array size mismatch");
  std::vector<std::size_t> offsets{0}, cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      const double v = a[r * n_cols + c];
      if (v != 0.0 || r == c) {
        cols.push_back(c);
        vals.push_back(v);
      }
    }
    offsets.push_back(cols.size());
  }
  return CsrMatrix(n_rows, n_cols, std::move(offsets), std::move(cols),
                   std::move(vals));
}

std::size_t CsrMatrix::find(std::size_t row, std::size_t col) const {
  const auto first = cols_.begin() + offsets_[row];
  const auto last = cols_.begin() + offsets_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return nnz();
  return static_cast<std::size_t>(it - cols_.begin());
}

double CsrMatrix::operator()(std::size_t row, std::size_t col) const {
  const auto k = find(row, col);
  return k == nnz() ? 0.0 : values_[k];
}

void CsrMatrix::add(std::size_t row, std::size_t col, double value) {
  const auto k = find(row, col);
  if (k == nnz())
    throw Error("entry (" + std::to_string(row) + ", " + std::to_string(col) +
                ") is not in the sparsity pattern");
  values_[k] += value;
}

void CsrMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(std::min(n_rows_, n_cols_), 0.0);
  for (std::size_t r = 0; r < d.size(); ++r) d[r] = (*this)(r, r);
  return d;
}

bool CsrMatrix::is_symmetric(double tol) const {
  if (n_rows_ != n_cols_) return false;
  for (std::size_t r = 0; r < n_rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      const double scale = std::max(1.0, std::abs(values_[k]));
      if (std::abs(values_[k] - (*this)(cols_[k], r)) > tol * scale) return false;
    }
  return true;
}

std::vector<double> CsrMatrix::to_dense() const {
  std::vector<double> out(n_rows_ * n_cols_, 0.0);
  for (std::size_t r = 0; r < n_rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
      out[r * n_cols_ + cols_[k]] = values_[k];
  return out;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_cols_ || y.size() != n_rows_)
    throw Error("spmv dimension mismatch");
  for (std::size_t r = 0; r < n_rows_; ++r) {
    double s = 0.0;
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
      s += values_[k] * x[cols_[k]];
    y[r] = s;
  }
}

DVector spmv(const CsrMatrix &A, std::span<const double> x) {
  DVector y(A.n_rows());
  A.multiply(x, y);
  return y;
}

SparsityBuilder::SparsityBuilder(std::size_t n_rows, std::size_t n_cols)
    : n_cols_(n_cols), rows_(n_rows) {}

void SparsityBuilder::add(std::size_t row, std::size_t col) {
  rows_[row].push_back(col);
}

void SparsityBuilder::add_block(std::span<const std::size_t> rows,
                                std::span<const std::size_t> cols) {
  for (auto r : rows) rows_[r].insert(rows_[r].end(), cols.begin(), cols.end());
}

CsrMatrix SparsityBuilder::build() const {
  std::vector<std::size_t> offsets{0}, cols;
  for (auto row : rows_) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets.push_back(cols.size());
  }
  std::vector<double> vals(cols.size(), 0.0);
  return CsrMatrix(rows_.size(), n_cols_, std::move(offsets), std::move(cols),
                   std::move(vals));
}

// ---------------------------------------------------------------------------
// Preconditioners

namespace {

class IdentityPreconditioner final : public Preconditioner {
 public:
  void apply(std::span<const double> r, std::span<double> z) const override {
    std::copy(r.begin(), r.end(), z.begin());
  }
};

std::vector<double> checked_diagonal(const CsrMatrix &A, const char *what) {
  auto d = A.diagonal();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] == 0.0)
      throw Error(std::string(what) + " preconditioner: zero diagonal in row " +
                  std::to_string(i));
  return d;
}

class JacobiPreconditioner final : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const CsrMatrix &A)
      : inv_diag_(checked_diagonal(A, "Jacobi")) {
    for (auto &v : inv_diag_) v = 1.0 / v;
  }
  void apply(std::span<const double> r, std::span<double> z) const override {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
  }

 private:
  std::vector<double> inv_diag_;
};

// M = (D + wL) D^{-1} (D + wU) / (w (2 - w))
class SsorPreconditioner final : public Preconditioner {
 public:
  SsorPreconditioner(const CsrMatrix &A, double omega)
      : A_(A), omega_(omega), diag_(checked_diagonal(A, "SSOR")) {
    if (!(omega > 0.0 && omega < 2.0))
      throw Error("SSOR relaxation must satisfy 0 < omega < 2");
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    const auto &off = A_.row_offsets();
    const auto &col = A_.columns();
    const auto &val = A_.values();
    const std::size_t n = r.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = r[i];
      for (std::size_t k = off[i]; k < off[i + 1] && col[k] < i; ++k)
        s -= omega_ * val[k] * z[col[k]];
      z[i] = s / diag_[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] *= diag_[i];
    for (std::size_t i = n; i-- > 0;) {
      double s = z[i];
      for (std::size_t k = off[i + 1]; k-- > off[i] && col[k] > i;)
        s -= omega_ * val[k] * z[col[k]];
      z[i] = s / diag_[i];
    }
    const double scale = omega_ * (2.0 - omega_);
    for (auto &v : z) v *= scale;
  }

 private:
  CsrMatrix A_;
  double omega_;
  std::vector<double> diag_;
};

// Incomplete LU without fill: L (unit lower) and U share A's pattern.
class Ilu0Preconditioner final : public Preconditioner {
 public:
  explicit Ilu0Preconditioner(const CsrMatrix &A)
      : off_(A.row_offsets()), col_(A.columns()), lu_(A.values()) {
    if (A.n_rows() != A.n_cols()) throw Error("ILU0 needs a square matrix");
    const std::size_t n = A.n_rows();
    diag_pos_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      diag_pos_[i] = A.find(i, i);
      if (diag_pos_[i] == A.nnz())
        throw Error("ILU0 preconditioner: diagonal missing from pattern in row " +
                    std::to_string(i));
    }
    std::vector<std::size_t> where(n, SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = off_[i]; k < off_[i + 1]; ++k) where[col_[k]] = k;
      for (std::size_t k = off_[i]; k < off_[i + 1] && col_[k] < i; ++k) {
        const std::size_t j = col_[k];
        const double pivot = lu_[diag_pos_[j]];
        if (pivot == 0.0)
          throw Error("ILU0 preconditioner: zero pivot in row " + std::to_string(j));
        lu_[k] /= pivot;
        for (std::size_t m = diag_pos_[j] + 1; m < off_[j + 1]; ++m)
          if (where[col_[m]] != SIZE_MAX) lu_[where[col_[m]]] -= lu_[k] * lu_[m];
      }
      for (std::size_t k = off_[i]; k < off_[i + 1]; ++k) where[col_[k]] = SIZE_MAX;
      if (lu_[diag_pos_[i]] == 0.0)
        throw Error("ILU0 preconditioner: zero pivot in row " + std::to_string(i));
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    const std::size_t n = r.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = r[i];
      for (std::size_t k = off_[i]; k < diag_pos_[i]; ++k) s -= lu_[k] * z[col_[k]];
      z[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = z[i];
      for (std::size_t k = diag_pos_[i] + 1; k < off_[i + 1]; ++k)
        s -= lu_[k] * z[col_[k]];
      z[i] = s / lu_[diag_pos_[i]];
    }
  }

 private:
  std::vector<std::size_t> off_, col_;
  std::vector<double> lu_;
  std::vector<std::size_t> diag_pos_;
};

}  // namespace

std::unique_ptr<Preconditioner> build_preconditioner(
    const CsrMatrix &A, const PreconditionerConfig &config) {
  switch (config.type) {
    case PreconditionerType::Identity:
      return std::make_unique<IdentityPreconditioner>();
    case PreconditionerType::Jacobi:
      return std::make_unique<JacobiPreconditioner>(A);
    case PreconditionerType::SSOR:
      return std::make_unique<SsorPreconditioner>(A, config.ssor_omega);
    case PreconditionerType::ILU0:
      return std::make_unique<Ilu0Preconditioner>(A);
  }
  throw Error("unknown preconditioner type");
}

// ---------------------------------------------------------------------------
// Krylov solvers

std::string to_string(SolverType t) {
  switch (t) {
    case SolverType::CG: return "CG";
    case SolverType::GMRES: return "GMRES";
    case SolverType::BiCGStab: return "BiCGStab";
  }
  return "?";
}

std::string to_string(PreconditionerType t) {
  switch (t) {
    case PreconditionerType::Identity: return "Identity";
    case PreconditionerType::Jacobi: return "Jacobi";
    case PreconditionerType::SSOR: return "SSOR";
    case PreconditionerType::ILU0: return "ILU0";
  }
  return "?";
}

namespace {

double true_residual(const CsrMatrix &A, std::span<const double> b,
                     std::span<const double> x, std::span<double> r) {
  A.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

struct Monitor {
  const SolverConfig &cfg;
  SolveReport &report;
  void log(double residual) const {
    if (cfg.log_history) report.history.push_back(residual);
  }
};

void run_cg(const CsrMatrix &A, std::span<const double> b, std::span<double> x,
            const SolverConfig &cfg, const Preconditioner &M, SolveReport &rep) {
  const std::size_t n = b.size();
  const Monitor mon{cfg, rep};
  DVector r(n), z(n), p(n), q(n);
  double res = true_residual(A, b, x, r);
  mon.log(res);
  if (res <= rep.target_residual) {
    rep.converged = true;
    return;
  }
  // Restarted from the true residual whenever the recurrence claims
  // convergence that the explicit residual does not confirm.
  while (rep.iterations < cfg.max_iterations) {
    M.apply(r, z);
    p = z;
    double rz = dot(r, z);
    while (rep.iterations < cfg.max_iterations) {
      A.multiply(p, q);
      const double pq = dot(p, q);
      if (pq <= 0.0 || !std::isfinite(pq)) {
        rep.reason = "CG breakdown: p^T A p <= 0 (matrix not SPD?)";
        return;
      }
      const double alpha = rz / pq;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      ++rep.iterations;
      res = norm2(r);
      mon.log(res);
      if (res <= rep.target_residual) break;
      M.apply(r, z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res = true_residual(A, b, x, r);
    if (res <= rep.target_residual) {
      rep.converged = true;
      return;
    }
  }
}

void run_gmres(const CsrMatrix &A, std::span<const double> b,
               std::span<double> x, const SolverConfig &cfg,
               const Preconditioner &M, SolveReport &rep) {
  const std::size_t n = b.size();
  const int m = std::max(1, cfg.gmres_restart);
  const Monitor mon{cfg, rep};
  DVector r(n), w(n);
  std::vector<DVector> V(m + 1, DVector(n)), Z(m, DVector(n));
  std::vector<double> H((m + 1) * m), cs(m), sn(m), g(m + 1), y(m);
  const auto h = [&](int i, int j) -> double & { return H[i * m + j]; };

  double res = true_residual(A, b, x, r);
  mon.log(res);
  while (true) {
    if (res <= rep.target_residual) {
      rep.converged = true;
      return;
    }
    if (rep.iterations >= cfg.max_iterations) return;
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / res;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = res;
    int j = 0;
    for (; j < m && rep.iterations < cfg.max_iterations; ++j) {
      M.apply(V[j], Z[j]);
      A.multiply(Z[j], w);
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        h(i, j) = dot(w, V[i]);
        axpy(-h(i, j), V[i], w);
      }
      h(j + 1, j) = norm2(w);
      if (h(j + 1, j) > 0.0)
        for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / h(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      if (denom == 0.0) {
        rep.reason = "GMRES breakdown: singular Hessenberg matrix";
        break;
      }
      cs[j] = h(j, j) / denom;
      sn[j] = h(j + 1, j) / denom;
      h(j, j) = denom;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      mon.log(std::abs(g[j + 1]));
      if (std::abs(g[j + 1]) <= rep.target_residual || h(j + 1, j) == 0.0) {
        ++j;
        break;
      }
    }
    // Back substitution for the least-squares update.
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= h(i, k) * y[k];
      y[i] = s / h(i, i);
    }
    for (int i = 0; i < j; ++i) axpy(y[i], Z[i], x);
    res = true_residual(A, b, x, r);
    if (!rep.reason.empty() || j == 0) return;
  }
}

void run_bicgstab(const CsrMatrix &A, std::span<const double> b,
                  std::span<double> x, const SolverConfig &cfg,
                  const Preconditioner &M, SolveReport &rep) {
  const std::size_t n = b.size();
  const Monitor mon{cfg, rep};
  DVector r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  double res = true_residual(A, b, x, r);
  mon.log(res);
  while (true) {
    if (res <= rep.target_residual) {
      rep.converged = true;
      return;
    }
    r0 = r;
    const double r0_norm = res;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    while (rep.iterations < cfg.max_iterations) {
      const double rho_new = dot(r0, r);
      if (std::abs(rho_new) <= 1e-30 * r0_norm * norm2(r)) {
        rep.reason = "BiCGStab breakdown: rho ~ 0";
        return;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      M.apply(p, ph);
      A.multiply(ph, v);
      const double r0v = dot(r0, v);
      if (r0v == 0.0) {
        rep.reason = "BiCGStab breakdown: (r0, v) = 0";
        return;
      }
      alpha = rho / r0v;
      for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
      ++rep.iterations;
      if (norm2(s) <= rep.target_residual) {
        axpy(alpha, ph, x);
        mon.log(norm2(s));
        break;
      }
      M.apply(s, sh);
      A.multiply(sh, t);
      const double tt = dot(t, t);
      if (tt == 0.0) {
        rep.reason = "BiCGStab breakdown: t = 0";
        axpy(alpha, ph, x);
        return;
      }
      omega = dot(t, s) / tt;
      axpy(alpha, ph, x);
      axpy(omega, sh, x);
      for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
      res = norm2(r);
      mon.log(res);
      if (res <= rep.target_residual) break;
      if (omega == 0.0) {
        rep.reason = "BiCGStab breakdown: omega = 0";
        return;
      }
    }
    res = true_residual(A, b, x, r);
    if (res > rep.target_residual && rep.iterations >= cfg.max_iterations) return;
  }
}

}  // namespace

SolveReport solve(const CsrMatrix &A, std::span<const double> b,
                  std::span<double> x, const SolverConfig &config,
                  const Preconditioner &M) {
  if (A.n_rows() != A.n_cols()) throw Error("solve: matrix is not square");
  if (b.size() != A.n_rows() || x.size() != A.n_cols())
    throw Error("solve: dimension mismatch");
  if (!(config.tolerance > 0.0) || !(config.absolute_tolerance > 0.0) ||
      config.max_iterations < 1)
    throw Error("solve: tolerances must be positive and max_iterations >= 1");

  SolveReport rep;
  rep.target_residual =
      std::max(config.tolerance * norm2(b), config.absolute_tolerance);
  switch (config.type) {
    case SolverType::CG: run_cg(A, b, x, config, M, rep); break;
    case SolverType::GMRES: run_gmres(A, b, x, config, M, rep); break;
    case SolverType::BiCGStab: run_bicgstab(A, b, x, config, M, rep); break;
  }
  DVector r(b.size());
  rep.final_residual = true_residual(A, b, x, r);
  rep.converged = rep.final_residual <= rep.target_residual;
  if (!rep.converged && rep.reason.empty()) rep.reason = "maximum iterations reached";
  if (config.log_history) {
    if (rep.history.empty()) rep.history.push_back(rep.final_residual);
    else rep.history.back() = rep.final_residual;
  }
  return rep;
}

std::pair<DVector, SolveReport> solve(const CsrMatrix &A,
                                      std::span<const double> b,
                                      const SolverConfig &config,
                                      const PreconditionerConfig &M) {
  DVector x(A.n_cols(), 0.0);
  const auto pre = build_preconditioner(A, M);
  auto rep = solve(A, b, x, config, *pre);
  return {std::move(x), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Handlers

LinearSolverHandler::LinearSolverHandler(std::string subsection_path,
                                         SolverConfig defaults)
    : path_(std::move(subsection_path)), config_(defaults) {}

void LinearSolverHandler::declare_parameters(params::ParamTree &params) const {
  using namespace params;
  params.enter_subsection_path(path_);
  params.declare_entry("Type", to_string(config_.type),
                       Selection{{"CG", "GMRES", "BiCGStab"}},
                       "Krylov method: CG (SPD systems only), GMRES or BiCGStab.");
  params.declare_entry("Maximum number of iterations",
                       std::to_string(config_.max_iterations), Integer{1, INT32_MAX});
  params.declare_entry("Tolerance", format_real(config_.tolerance), Real{0, 1},
                       "Residual reduction relative to the right-hand side norm.");
  params.set_verbosity(Verbosity::Full);
  params.declare_entry("Absolute tolerance", format_real(config_.absolute_tolerance), Real{0, 1e300},
                       "Floor on the residual target.");
  params.declare_entry("Log history", config_.log_history ? "true" : "false",
                       Bool{});
  params.reset_verbosity();
  params.enter_subsection("GMRES");
  params.declare_entry("Max. number of temporary vectors",
                       std::to_string(config_.gmres_restart), Integer{1, 100000},
                       "Restart length.");
  params.leave_subsection();
  params.leave_subsection_path();
}

void LinearSolverHandler::parse_parameters(const params::ParamTree &params) {
  const auto base = params::split_path(path_);
  const auto get = [&](const std::string &name) { return params.get(base, name); };
  const auto &type = get("Type");
  config_.type = type == "CG" ? SolverType::CG
                 : type == "GMRES" ? SolverType::GMRES
                                   : SolverType::BiCGStab;
  config_.max_iterations = std::stoi(get("Maximum number of iterations"));
  config_.tolerance = std::stod(get("Tolerance"));
  config_.absolute_tolerance = std::stod(get("Absolute tolerance"));
  config_.log_history = get("Log history") == "true";
  auto gmres = base;
  gmres.push_back("GMRES");
  config_.gmres_restart =
      std::stoi(params.get(gmres, "Max. number of temporary vectors"));
  if (!(config_.tolerance > 0.0) || !(config_.absolute_tolerance > 0.0))
    throw params::ParamError("linear solver tolerances must be positive");
}

SolveReport LinearSolverHandler::solve(const CsrMatrix &A,
                                       std::span<const double> b,
                                       std::span<double> x,
                                       const Preconditioner &M) const {
  return linalg::solve(A, b, x, config_, M);
}

PreconditionerHandler::PreconditionerHandler(std::string subsection_path,
                                             PreconditionerConfig defaults)
    : path_(std::move(subsection_path)), config_(defaults) {}

void PreconditionerHandler::declare_parameters(params::ParamTree &params) const {
  using namespace params;
  params.enter_subsection_path(path_);
  params.declare_entry("Type", to_string(config_.type),
                       Selection{{"Identity", "Jacobi", "SSOR", "ILU0"}});
  params.enter_subsection("SSOR");
  params.declare_entry("Omega", format_real(config_.ssor_omega), Real{0, 2},
                       "Relaxation parameter, 0 < omega < 2.");
  params.leave_subsection();
  params.leave_subsection_path();
}

void PreconditionerHandler::parse_parameters(const params::ParamTree &params) {
  const auto base = params::split_path(path_);
  const auto &type = params.get(base, "Type");
  config_.type = type == "Identity" ? PreconditionerType::Identity
                 : type == "Jacobi" ? PreconditionerType::Jacobi
                 : type == "SSOR"   ? PreconditionerType::SSOR
                                    : PreconditionerType::ILU0;
  auto ssor = base;
  ssor.push_back("SSOR");
  config_.ssor_omega = std::stod(params.get(ssor, "Omega"));
  if (!(config_.ssor_omega > 0.0 && config_.ssor_omega < 2.0))
    throw params::ParamError("SSOR omega must satisfy 0 < omega < 2");
}

std::unique_ptr<Preconditioner> PreconditionerHandler::build(
    const CsrMatrix &A) const {
  return build_preconditioner(A, config_);
}

}  // namespace flexfem::linalg
