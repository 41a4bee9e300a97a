#include <algorithm>
#include <cmath>

#include "ifenn/errors.hpp"
#include "ifenn/fem.hpp"

namespace ifenn::fem {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) throw InvalidArgument("triplet index out of range");
  }
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& t = entries[k];
    if (!m.col.empty() && k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
      m.val.back() += t.value;
      continue;
    }
    m.col.push_back(t.col);
    m.val.push_back(t.value);
    ++m.row_ptr[t.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  CsrMatrix m;
  m.rows = m.cols = n;
  m.row_ptr.resize(n + 1);
  m.col.resize(n);
  m.val.assign(n, 1.0);
  for (std::size_t i = 0; i <= n; ++i) m.row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) m.col[i] = i;
  return m;
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows || c >= cols) throw InvalidArgument("matrix index out of range");
  auto first = col.begin() + row_ptr[r];
  auto last = col.begin() + row_ptr[r + 1];
  auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return val[it - col.begin()];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols || y.size() != rows) throw InvalidArgument("matrix-vector size mismatch");
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows);
  multiply(x, y);
  return y;
}

double CsrMatrix::max_asymmetry() const {
  if (rows != cols) throw InvalidArgument("asymmetry of a non-square matrix");
  double worst = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      worst = std::max(worst, std::abs(val[k] - at(col[k], r)));
    }
  }
  return worst;
}

std::vector<double> SparseSystem::reactions(std::span<const double> x) const {
  if (x.size() != dofs()) throw InvalidArgument("solution size does not match system");
  auto ax = constrained_rows.multiply(x);
  for (std::size_t k = 0; k < ax.size(); ++k) ax[k] -= constrained_rhs[k];
  return ax;
}

}  // namespace ifenn::fem
