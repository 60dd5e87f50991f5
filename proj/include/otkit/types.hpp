#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace otkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  // validation family (CLI exit 2)
  NegativeEntry,
  NotNormalized,
  ZeroEntryInLogMode,
  NonPositiveEpsilon,
  EmptyVector,
  EmptyMatrix,
  DimensionMismatch,
  ColumnCountMismatch,
  NonPositiveHistogram,
  TraceTooShort,
  EmptyBatch,
  ShapeMismatch,
  BatchLargerThanData,
  ParseError,
  RaggedRows,
  InvalidConfig,
  // numeric family (CLI exit 3)
  NumericOverflow,
  KernelDegenerate,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

  // KernelDegenerate is a numeric failure caused by an exactly-zero scaling
  // denominator; it counts as an overflow-class error.
  bool is_numeric() const {
    return code_ == ErrorCode::NumericOverflow ||
           code_ == ErrorCode::KernelDegenerate;
  }
  bool is_numeric_overflow() const { return is_numeric(); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

/// Probability vector: nonnegative entries summing to 1 (abs tol 1e-12).
struct Histogram {
  Vector values;

  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index i) const { return values[i]; }
};

/// Matrix whose columns are all Histograms.
struct HistogramBatch {
  Matrix columns;

  Eigen::Index dim() const { return columns.rows(); }
  Eigen::Index count() const { return columns.cols(); }
  Histogram column(Eigen::Index s) const { return Histogram{columns.col(s)}; }
};

/// Ground cost C with its Gibbs kernel K = exp(-C/epsilon).
struct CostKernelPair {
  Matrix cost;
  double epsilon = 1.0;
  Matrix kernel;
  bool underflow = false;  // set when any kernel entry rounded to exactly 0

  Eigen::Index rows() const { return cost.rows(); }
  Eigen::Index cols() const { return cost.cols(); }
};

/// Transport plan together with the marginals it targets.
struct Coupling {
  Matrix plan;
  Histogram row_marginal;
  Histogram col_marginal;
};

enum class SolveMode { Vanilla, Log, Parallel };

struct SolveOptions {
  int max_iters = 1000;
  double tolerance = 1e-9;
  SolveMode mode = SolveMode::Vanilla;
  // Run exactly max_iters iterations and skip the convergence check;
  // required by the gradient solvers, whose backward loops index a
  // full-length trace.
  bool fixed_iters = false;
};

inline void check_solve_options(const SolveOptions& opts) {
  if (opts.max_iters < 1)
    fail(ErrorCode::InvalidConfig, "max_iters must be >= 1");
  if (!(opts.tolerance > 0.0))
    fail(ErrorCode::InvalidConfig, "tolerance must be > 0");
}

/// Validate a raw vector as a Histogram.
///
/// `renormalize` rescales to unit mass (clamping entries up to 1e-16 first
/// when `strict_positive` is set, so log-domain solvers never see a zero).
/// Without it, a sum deviating from 1 by more than 1e-9 is rejected.
Histogram validate_histogram(const Vector& values, bool strict_positive = false,
                             bool renormalize = false);

/// Column-wise validate_histogram.
HistogramBatch validate_histogram_batch(const Matrix& columns,
                                        bool strict_positive = false,
                                        bool renormalize = false);

/// K = exp(-cost/epsilon). Flags underflow when an entry rounds to 0.
CostKernelPair build_kernel(const Matrix& cost, double epsilon);

}  // namespace otkit
