#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace biot {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed-row matrix with strictly increasing column indices per row.
class SparseMatrix {
 public:
  SparseMatrix() : offsets_{0} {}
  SparseMatrix(int rows, int cols);

  /// Duplicates are summed.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(int n);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int nnz() const noexcept { return static_cast<int>(values_.size()); }
  const std::vector<int>& offsets() const noexcept { return offsets_; }
  const std::vector<int>& indices() const noexcept { return indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  std::vector<Triplet> to_triplets() const;
  double coeff(int i, int j) const;

  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
  Eigen::VectorXd transpose_multiply(const Eigen::VectorXd& x) const;
  SparseMatrix transpose() const;
  SparseMatrix scaled(double s) const;
  /// Rows and columns picked (and renumbered) by the given index lists.
  SparseMatrix submatrix(std::span<const int> rows, std::span<const int> cols) const;
  Eigen::MatrixXd to_dense() const;
  /// max |a_ij - a_ji| relative to max |a_ij|.
  double asymmetry() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> offsets_;
  std::vector<int> indices_;
  std::vector<double> values_;
};

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);

/// Sparse LU factorization (UMFPACK). Immutable after construction; solves
/// may run concurrently.
class SparseLU {
 public:
  /// Throws SingularMatrixError with the offending pivot column.
  explicit SparseLU(const SparseMatrix& a);
  ~SparseLU();
  SparseLU(SparseLU&&) noexcept;
  SparseLU& operator=(SparseLU&&) noexcept;
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;

  int size() const noexcept { return n_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// Reciprocal condition estimate reported by the factorization.
  double rcond() const noexcept { return rcond_; }

 private:
  int n_ = 0;
  // The CSR arrays of A are handed over as the column storage of A^T.
  std::vector<int> ap_, ai_;
  std::vector<double> ax_;
  void* numeric_ = nullptr;
  double rcond_ = 0.0;
};

/// Square grid of sparse blocks plus dense constraint rows c_k, assembled as
/// [[K, C^T], [C, 0]].
class BlockSystem {
 public:
  explicit BlockSystem(std::vector<int> block_sizes);

  int num_blocks() const { return static_cast<int>(sizes_.size()); }
  int block_size(int i) const { return sizes_.at(i); }
  int offset(int i) const { return offsets_.at(i); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  int size() const { return offsets_.back() + num_constraints(); }

  /// Adds scale * m to block (i, j).
  void add_block(int i, int j, const SparseMatrix& m, double scale = 1.0);
  /// Constraint on the unknowns of block `block`: row . x_block = target.
  void add_constraint(int block, const Eigen::VectorXd& row);

  SparseMatrix assemble() const;
  Eigen::VectorXd stack(std::span<const Eigen::VectorXd> rhs,
                        const Eigen::VectorXd& targets) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  std::vector<Triplet> triplets_;
  std::vector<std::pair<int, Eigen::VectorXd>> constraints_;
};

struct BlockSolution {
  std::vector<Eigen::VectorXd> fields;
  Eigen::VectorXd multipliers;
  /// ||A x - b|| / ||b|| of the augmented system (absolute when b = 0).
  double residual = 0.0;
};

/// Factorizes a BlockSystem once and solves for many right-hand sides.
class BlockSolver {
 public:
  explicit BlockSolver(const BlockSystem& system);
  BlockSolution solve(std::span<const Eigen::VectorXd> rhs,
                      const Eigen::VectorXd& targets = {}) const;
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  double rcond() const noexcept { return lu_.rcond(); }

 private:
  std::vector<int> sizes_;
  int num_constraints_ = 0;
  SparseMatrix matrix_;
  SparseLU lu_;
  std::vector<int> offsets_;
};

BlockSolution solve_constrained(const BlockSystem& system,
                                std::span<const Eigen::VectorXd> rhs,
                                const Eigen::VectorXd& targets = {});

struct Eigenpair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

/// Smallest theta with A v = theta B v; A symmetric, B symmetric positive
/// definite. Throws NumericalError when B is not positive definite.
Eigenpair smallest_generalized_eigenvalue(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace biot
