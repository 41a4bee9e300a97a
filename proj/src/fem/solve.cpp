#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ifenn/errors.hpp"
#include "ifenn/fem.hpp"

namespace ifenn::fem {
namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b,
                         std::vector<double>& r) {
  r.resize(a.rows);
  a.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const double bn = norm2(b);
  return bn > 0.0 ? norm2(r) / bn : norm2(r);
}

void check_square(const CsrMatrix& a, std::span<const double> b) {
  if (a.rows != a.cols) throw InvalidArgument("solver needs a square matrix");
  if (b.size() != a.rows) throw InvalidArgument("right-hand side size does not match matrix");
}

}  // namespace

SolveResult solve_pcg(const CsrMatrix& a, std::span<const double> b, const SolveOptions& options) {
  check_square(a, b);
  const std::size_t n = a.rows;
  SolveResult res;
  res.method = "pcg";
  res.x.assign(n, 0.0);
  const double bn = norm2(b);
  if (bn == 0.0) return res;

  std::vector<double> inv_diag(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a.at(i, i);
    if (!(d > 0.0)) throw SolverError("PCG: non-positive diagonal at row " + std::to_string(i), 1.0);
    inv_diag[i] = 1.0 / d;
  }
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
  double rel = 1.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    a.multiply(p, q);
    double pq = 0.0;
    for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
    if (!(pq > 0.0)) throw SolverError("PCG: matrix is not positive definite", rel);
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rel = norm2(r) / bn;
    res.iterations = it;
    if (rel < options.tolerance) break;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  // The recursive residual drifts; report the true one.
  std::vector<double> tmp;
  res.relative_residual = relative_residual(a, res.x, b, tmp);
  if (!(res.relative_residual < std::max(options.tolerance * 100.0, 1e-10))) {
    throw SolverError("PCG did not converge in " + std::to_string(res.iterations) + " iterations",
                      res.relative_residual);
  }
  return res;
}

SolveResult solve_lu(const CsrMatrix& a, std::span<const double> b, const SolveOptions& options) {
  check_square(a, b);
  const auto n = static_cast<Eigen::Index>(a.rows);
  // Row equilibration: coupled rows mix stiffness, capacity and conduction
  // scales that differ by many orders of magnitude.
  CsrMatrix s = a;
  std::vector<double> sb(b.begin(), b.end());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(a.nnz());
  for (std::size_t r = 0; r < a.rows; ++r) {
    double big = 0.0;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) big = std::max(big, std::abs(a.val[k]));
    if (big == 0.0) throw SolverError("sparse LU factorization failed: empty row " + std::to_string(r), 1.0);
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      s.val[k] = a.val[k] / big;
      if (s.val[k] != 0.0) trip.emplace_back(Eigen::Index(r), Eigen::Index(a.col[k]), s.val[k]);
    }
    sb[r] /= big;
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: singular matrix", 1.0);

  SolveResult res;
  res.method = "lu";
  Eigen::Map<const Eigen::VectorXd> bv(sb.data(), n);
  Eigen::VectorXd x = lu.solve(bv);
  res.x.assign(x.data(), x.data() + n);
  std::vector<double> r;
  res.relative_residual = relative_residual(s, res.x, sb, r);
  res.iterations = 1;
  // Iterative refinement on the stored factors.
  for (int k = 0; k < 3 && res.relative_residual > options.tolerance; ++k) {
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
    Eigen::VectorXd dx = lu.solve(rv);
    for (Eigen::Index i = 0; i < n; ++i) res.x[i] += dx[i];
    res.relative_residual = relative_residual(s, res.x, sb, r);
    ++res.iterations;
  }
  if (!std::isfinite(res.relative_residual) || res.relative_residual >= 1e-10) {
    std::ostringstream msg;
    msg << "sparse LU residual " << res.relative_residual << " above tolerance";
    throw SolverError(msg.str(), res.relative_residual);
  }
  return res;
}

SolveResult solve_sparse(const SparseSystem& system, const SolveOptions& options) {
  if (system.symmetric) return solve_pcg(system.matrix, system.rhs, options);
  return solve_lu(system.matrix, system.rhs, options);
}

}  // namespace ifenn::fem
