#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexfem/common.hpp"
#include "flexfem/params.hpp"

namespace flexfem::linalg {

// ---------------------------------------------------------------------------
// Vector helpers

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> a);

// ---------------------------------------------------------------------------
// Sparse matrix

/// Compressed sparse row matrix with sorted, unique column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  /// Takes ownership of a CSR triple; validates the structure.
  CsrMatrix(std::size_t n_rows, std::size_t n_cols,
            std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> columns, std::vector<double> values);

  static CsrMatrix identity(std::size_t n);
  /// Builds from a row-major dense array; exact zeros are dropped except on
  /// the diagonal.
  static CsrMatrix from_dense(std::size_t n_rows, std::size_t n_cols,
                              std::span<const double> row_major);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t> &row_offsets() const { return offsets_; }
  const std::vector<std::size_t> &columns() const { return cols_; }
  const std::vector<double> &values() const { return values_; }
  std::vector<double> &values() { return values_; }

  /// Position of (row, col) in the value array, or nnz() when absent.
  std::size_t find(std::size_t row, std::size_t col) const;
  double operator()(std::size_t row, std::size_t col) const;
  /// Adds to an existing entry; throws when (row, col) is not in the pattern.
  void add(std::size_t row, std::size_t col, double value);
  void set_zero();

  std::vector<double> diagonal() const;
  bool is_symmetric(double tol = 0.0) const;
  std::vector<double> to_dense() const;

  void multiply(std::span<const double> x, std::span<double> y) const;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

/// y = A x
DVector spmv(const CsrMatrix &A, std::span<const double> x);

/// Accumulates a sparsity pattern row by row.
class SparsityBuilder {
 public:
  SparsityBuilder(std::size_t n_rows, std::size_t n_cols);
  void add(std::size_t row, std::size_t col);
  void add_block(std::span<const std::size_t> rows,
                 std::span<const std::size_t> cols);
  /// Zero-valued matrix with the accumulated pattern.
  CsrMatrix build() const;

 private:
  std::size_t n_cols_;
  std::vector<std::vector<std::size_t>> rows_;
};

// ---------------------------------------------------------------------------
// Preconditioners

enum class PreconditionerType { Identity, Jacobi, SSOR, ILU0 };

struct PreconditionerConfig {
  PreconditionerType type = PreconditionerType::Jacobi;
  double ssor_omega = 1.0;
};

/// Fixed linear operator z = M^{-1} r.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

std::unique_ptr<Preconditioner> build_preconditioner(
    const CsrMatrix &A, const PreconditionerConfig &config);

// ---------------------------------------------------------------------------
// Krylov solvers

enum class SolverType { CG, GMRES, BiCGStab };

std::string to_string(SolverType t);
std::string to_string(PreconditionerType t);

struct SolverConfig {
  SolverType type = SolverType::CG;
  int max_iterations = 1000;
  /// Relative to ||b||.
  double tolerance = 1e-10;
  /// Floor on the residual target.
  double absolute_tolerance = 1e-14;
  int gmres_restart = 30;
  bool log_history = false;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  /// Recomputed ||b - A x|| of the returned solution.
  double final_residual = 0.0;
  double target_residual = 0.0;
  std::vector<double> history;
  std::string reason;
};

/// Solves A x = b using `x` as initial guess. On convergence
/// ||b - A x|| <= max(tolerance * ||b||, absolute_tolerance).
SolveReport solve(const CsrMatrix &A, std::span<const double> b,
                  std::span<double> x, const SolverConfig &config,
                  const Preconditioner &M);

/// Convenience overload: zero initial guess, preconditioner built from A.
std::pair<DVector, SolveReport> solve(const CsrMatrix &A,
                                      std::span<const double> b,
                                      const SolverConfig &config,
                                      const PreconditionerConfig &M);

// ---------------------------------------------------------------------------
// Parameter-file handlers

/// Run-time selectable Krylov solver, configured from a parameter
/// subsection laid out as
///
///   subsection <path>
///     set Type = GMRES
///     subsection GMRES
///       set Max. number of temporary vectors = 100
///     end
///   end
class LinearSolverHandler {
 public:
  explicit LinearSolverHandler(std::string subsection_path,
                               SolverConfig defaults = {});

  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);

  const SolverConfig &config() const { return config_; }
  SolverConfig &config() { return config_; }

  SolveReport solve(const CsrMatrix &A, std::span<const double> b,
                    std::span<double> x, const Preconditioner &M) const;

 private:
  std::string path_;
  SolverConfig config_;
};

class PreconditionerHandler {
 public:
  explicit PreconditionerHandler(std::string subsection_path,
                                 PreconditionerConfig defaults = {});

  void declare_parameters(params::ParamTree &params) const;
  void parse_parameters(const params::ParamTree &params);

  const PreconditionerConfig &config() const { return config_; }
  PreconditionerConfig &config() { return config_; }

  std::unique_ptr<Preconditioner> build(const CsrMatrix &A) const;

 private:
  std::string path_;
  PreconditionerConfig config_;
};

}  // namespace flexfem::linalg
