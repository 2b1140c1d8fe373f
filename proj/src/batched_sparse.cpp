#include "rbrom/batched_sparse.hpp"

namespace rbrom {

Eigen::Map<const Eigen::SparseMatrix<double>> BatchedSparseCsc::view(
    int p) const {
  return {pattern->rows, pattern->cols, pattern->nnz(),
          pattern->col_ptr.data(), pattern->row_idx.data(),
          values.col(p).data()};
}

Eigen::SparseMatrix<double> BatchedSparseCsc::materialize(int p) const {
  return Eigen::SparseMatrix<double>(view(p));
}

Eigen::SparseMatrix<double> scatter_nnz(const SparsityPattern& pattern,
                                        const Eigen::VectorXd& z) {
  if (z.size() != pattern.nnz())
    throw ArgumentError("scatter_nnz: vector length must equal pattern nnz");
  Eigen::Map<const Eigen::SparseMatrix<double>> view(
      pattern.rows, pattern.cols, pattern.nnz(), pattern.col_ptr.data(),
      pattern.row_idx.data(), z.data());
  return Eigen::SparseMatrix<double>(view);
}

}  // namespace rbrom
