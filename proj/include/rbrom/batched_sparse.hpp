#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>

#include "rbrom/fe_space.hpp"

namespace rbrom {

/// One CSC sparsity pattern shared by all parameters; the nonzero values of
/// one parameter are stored consecutively (column p of `values`).
struct BatchedSparseCsc {
  std::shared_ptr<const SparsityPattern> pattern;
  Eigen::MatrixXd values;  // nnz x P

  int rows() const { return pattern->rows; }
  int cols() const { return pattern->cols; }
  int nnz() const { return pattern->nnz(); }
  int nbatch() const { return static_cast<int>(values.cols()); }

  // zero-copy sparse view of one parameter
  Eigen::Map<const Eigen::SparseMatrix<double>> view(int p) const;
  Eigen::SparseMatrix<double> materialize(int p) const;
};

/// Dense N x P block, one column per parameter.
struct BatchedVector {
  Eigen::MatrixXd values;

  int rows() const { return static_cast<int>(values.rows()); }
  int nbatch() const { return static_cast<int>(values.cols()); }
};

/// Places an nnz-length vector into the pattern's slots; round trip with the
/// nonzero-extraction view is the identity.
Eigen::SparseMatrix<double> scatter_nnz(const SparsityPattern& pattern,
                                        const Eigen::VectorXd& z);

}  // namespace rbrom
