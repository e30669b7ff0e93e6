#include "biot_iga/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <umfpack.h>

#include "biot_iga/errors.hpp"

namespace biot {

SparseMatrix::SparseMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  SparseMatrix m(rows, cols);
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw DimensionError("triplet (" + std::to_string(t.row) + ", " +
                           std::to_string(t.col) + ") outside a " + std::to_string(rows) +
                           " x " + std::to_string(cols) + " matrix");
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  m.indices_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  std::size_t k = 0;
  for (int r = 0; r < rows; ++r) {
    while (k < triplets.size() && triplets[k].row == r) {
      const int c = triplets[k].col;
      double v = 0.0;
      while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
        v += triplets[k].value;
        ++k;
      }
      m.indices_.push_back(c);
      m.values_.push_back(v);
    }
    m.offsets_[r + 1] = static_cast<int>(m.indices_.size());
  }
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

std::vector<Triplet> SparseMatrix::to_triplets() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (int r = 0; r < rows_; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({r, indices_[k], values_[k]});
  }
  return t;
}

double SparseMatrix::coeff(int i, int j) const {
  const auto b = indices_.begin() + offsets_.at(i);
  const auto e = indices_.begin() + offsets_.at(i + 1);
  const auto it = std::lower_bound(b, e, j);
  return (it != e && *it == j) ? values_[it - indices_.begin()] : 0.0;
}

Eigen::VectorXd SparseMatrix::operator*(const Eigen::VectorXd& x) const {
  if (x.size() != cols_) throw DimensionError("matvec size mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows_);
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) s += values_[k] * x[indices_[k]];
    y[r] = s;
  }
  return y;
}

Eigen::VectorXd SparseMatrix::transpose_multiply(const Eigen::VectorXd& x) const {
  if (x.size() != rows_) throw DimensionError("transposed matvec size mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) y[indices_[k]] += values_[k] * x[r];
  }
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t = to_triplets();
  for (auto& e : t) std::swap(e.row, e.col);
  return from_triplets(cols_, rows_, std::move(t));
}

SparseMatrix SparseMatrix::scaled(double s) const {
  SparseMatrix m = *this;
  for (double& v : m.values_) v *= s;
  return m;
}

SparseMatrix SparseMatrix::submatrix(std::span<const int> rows, std::span<const int> cols) const {
  std::vector<int> col_map(cols_, -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map.at(cols[j]) = static_cast<int>(j);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    for (int k = offsets_.at(r); k < offsets_[r + 1]; ++k) {
      const int c = col_map[indices_[k]];
      if (c >= 0) t.push_back({static_cast<int>(i), c, values_[k]});
    }
  }
  return from_triplets(static_cast<int>(rows.size()), static_cast<int>(cols.size()),
                       std::move(t));
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) d(r, indices_[k]) += values_[k];
  }
  return d;
}

double SparseMatrix::asymmetry() const {
  double worst = 0.0;
  double scale = 0.0;
  for (int r = 0; r < rows_; ++r) {
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      scale = std::max(scale, std::abs(values_[k]));
      worst = std::max(worst, std::abs(values_[k] - coeff(indices_[k], r)));
    }
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("sum size mismatch");
  auto t = a.to_triplets();
  auto tb = b.to_triplets();
  t.insert(t.end(), tb.begin(), tb.end());
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

SparseLU::SparseLU(const SparseMatrix& a) : n_(a.rows()) {
  if (a.rows() != a.cols()) throw DimensionError("LU needs a square matrix");
  ap_ = a.offsets();
  ai_ = a.indices();
  ax_ = a.values();
  if (n_ == 0) return;
  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  // The saddle-point systems have a symmetric pattern with zero diagonal
  // blocks; order A + A^T by nested dissection (METIS, fixed seed).
  control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC;
  control[UMFPACK_ORDERING] = UMFPACK_ORDERING_METIS;
  void* symbolic = nullptr;
  int status = umfpack_di_symbolic(n_, n_, ap_.data(), ai_.data(), ax_.data(), &symbolic,
                                   control, info);
  if (status != UMFPACK_OK) {
    throw SingularMatrixError("symbolic factorization failed (status " +
                                  std::to_string(status) + ")",
                              -1);
  }
  status = umfpack_di_numeric(ap_.data(), ai_.data(), ax_.data(), symbolic, &numeric_, control,
                              info);
  umfpack_di_free_symbolic(&symbolic);
  if (status != UMFPACK_OK && status != UMFPACK_WARNING_singular_matrix) {
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    throw SingularMatrixError("numeric factorization failed (status " +
                                  std::to_string(status) + ")",
                              -1);
  }
  rcond_ = info[UMFPACK_RCOND];
  // Inspect the pivots of U to locate exact or relatively negligible ones.
  std::vector<int> q(n_);
  std::vector<double> dx(n_), rs(n_);
  int do_recip = 0;
  umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                         q.data(), dx.data(), &do_recip, rs.data(), numeric_);
  double dmax = 0.0;
  for (double d : dx) dmax = std::max(dmax, std::abs(d));
  for (int k = 0; k < n_; ++k) {
    if (!(std::abs(dx[k]) > 1e-14 * dmax)) {
      umfpack_di_free_numeric(&numeric_);
      // Columns of A^T are rows of A.
      throw SingularMatrixError("matrix is singular to working precision at pivot " +
                                    std::to_string(k) + " (row " + std::to_string(q[k]) + ")",
                                q[k]);
    }
  }
}

SparseLU::~SparseLU() {
  if (numeric_) umfpack_di_free_numeric(&numeric_);
}

SparseLU::SparseLU(SparseLU&& o) noexcept
    : n_(o.n_),
      ap_(std::move(o.ap_)),
      ai_(std::move(o.ai_)),
      ax_(std::move(o.ax_)),
      numeric_(std::exchange(o.numeric_, nullptr)),
      rcond_(o.rcond_) {}

SparseLU& SparseLU::operator=(SparseLU&& o) noexcept {
  if (this != &o) {
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    n_ = o.n_;
    ap_ = std::move(o.ap_);
    ai_ = std::move(o.ai_);
    ax_ = std::move(o.ax_);
    numeric_ = std::exchange(o.numeric_, nullptr);
    rcond_ = o.rcond_;
  }
  return *this;
}

Eigen::VectorXd SparseLU::solve(const Eigen::VectorXd& b) const {
  if (b.size() != n_) throw DimensionError("rhs size mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
  if (n_ == 0) return x;
  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  const int status = umfpack_di_solve(UMFPACK_At, ap_.data(), ai_.data(), ax_.data(),
                                      x.data(), b.data(), numeric_, control, info);
  if (status != UMFPACK_OK) {
    throw SingularMatrixError("triangular solve failed (status " + std::to_string(status) + ")",
                              -1);
  }
  return x;
}

BlockSystem::BlockSystem(std::vector<int> block_sizes) : sizes_(std::move(block_sizes)) {
  offsets_.assign(1, 0);
  for (int s : sizes_) offsets_.push_back(offsets_.back() + s);
}

void BlockSystem::add_block(int i, int j, const SparseMatrix& m, double scale) {
  if (m.rows() != block_size(i) || m.cols() != block_size(j)) {
    throw DimensionError("block (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") has the wrong shape");
  }
  if (scale == 0.0) return;
  for (int r = 0; r < m.rows(); ++r) {
    for (int k = m.offsets()[r]; k < m.offsets()[r + 1]; ++k) {
      triplets_.push_back({offsets_[i] + r, offsets_[j] + m.indices()[k], scale * m.values()[k]});
    }
  }
}

void BlockSystem::add_constraint(int block, const Eigen::VectorXd& row) {
  if (row.size() != block_size(block)) throw DimensionError("constraint row has the wrong size");
  constraints_.emplace_back(block, row);
}

SparseMatrix BlockSystem::assemble() const {
  std::vector<Triplet> t = triplets_;
  const int base = offsets_.back();
  for (int k = 0; k < num_constraints(); ++k) {
    const auto& [block, row] = constraints_[k];
    for (int j = 0; j < row.size(); ++j) {
      if (row[j] == 0.0) continue;
      t.push_back({base + k, offsets_[block] + j, row[j]});
      t.push_back({offsets_[block] + j, base + k, row[j]});
    }
  }
  return SparseMatrix::from_triplets(size(), size(), std::move(t));
}

Eigen::VectorXd BlockSystem::stack(std::span<const Eigen::VectorXd> rhs,
                                   const Eigen::VectorXd& targets) const {
  if (static_cast<int>(rhs.size()) != num_blocks()) {
    throw DimensionError("need one right-hand side per block");
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(size());
  for (int i = 0; i < num_blocks(); ++i) {
    if (rhs[i].size() == 0) continue;
    if (rhs[i].size() != block_size(i)) throw DimensionError("rhs block has the wrong size");
    b.segment(offsets_[i], block_size(i)) = rhs[i];
  }
  if (targets.size() > 0) {
    if (targets.size() != num_constraints()) throw DimensionError("one target per constraint");
    b.tail(num_constraints()) = targets;
  }
  return b;
}

BlockSolver::BlockSolver(const BlockSystem& system)
    : num_constraints_(system.num_constraints()),
      matrix_(system.assemble()),
      lu_(matrix_) {
  for (int i = 0; i < system.num_blocks(); ++i) {
    sizes_.push_back(system.block_size(i));
    offsets_.push_back(system.offset(i));
  }
}

BlockSolution BlockSolver::solve(std::span<const Eigen::VectorXd> rhs,
                                 const Eigen::VectorXd& targets) const {
  if (rhs.size() != sizes_.size()) throw DimensionError("need one right-hand side per block");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(matrix_.rows());
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (rhs[i].size() == 0) continue;
    if (rhs[i].size() != sizes_[i]) throw DimensionError("rhs block has the wrong size");
    b.segment(offsets_[i], sizes_[i]) = rhs[i];
  }
  if (targets.size() > 0) {
    if (targets.size() != num_constraints_) throw DimensionError("one target per constraint");
    b.tail(num_constraints_) = targets;
  }
  const Eigen::VectorXd x = lu_.solve(b);
  BlockSolution s;
  for (std::size_t i = 0; i < sizes_.size(); ++i) s.fields.push_back(x.segment(offsets_[i], sizes_[i]));
  s.multipliers = x.tail(num_constraints_);
  const double r = (matrix_ * x - b).norm();
  const double nb = b.norm();
  s.residual = nb > 0.0 ? r / nb : r;
  return s;
}

BlockSolution solve_constrained(const BlockSystem& system, std::span<const Eigen::VectorXd> rhs,
                                const Eigen::VectorXd& targets) {
  return BlockSolver(system).solve(rhs, targets);
}

Eigenpair smallest_generalized_eigenvalue(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows()) {
    throw DimensionError("pencil matrices must be square and of equal size");
  }
  if (A.rows() == 0) throw DimensionError("empty pencil");
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success) throw NumericalError("B is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigensolve failed");
  return {es.eigenvalues()[0], es.eigenvectors().col(0)};
}

}  // namespace biot
