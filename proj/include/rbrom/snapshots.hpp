#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rbrom/param_space.hpp"

namespace rbrom {

enum class Axis : std::uint8_t {
  space = 0,      // free dofs
  space_nnz = 1,  // nonzero slots of a shared sparsity pattern
  time = 2,       // 1-based solver steps t_1..t_Nt
  param = 3,
  reduced = 4,    // coordinates in a reduced basis
};

struct RealizationEcho {
  Sampling strategy = Sampling::halton;
  std::uint64_t seed = 0;
  Eigen::MatrixXd bounds;  // 2 x p
};

RealizationEcho echo_of(const Realization& r);

/// Dense snapshot block with axis metadata. Storage is canonical: the first
/// listed axis is fastest, so a (space, time, param) tensor stacks time
/// blocks per parameter exactly like the vectorized space-time solution.
class SnapshotTensor {
 public:
  SnapshotTensor() = default;
  SnapshotTensor(std::vector<Axis> axes, std::vector<Eigen::Index> dims,
                 Eigen::VectorXd data, RealizationEcho echo = {});

  static SnapshotTensor from_matrix(Axis row_axis, const Eigen::MatrixXd& m,
                                    RealizationEcho echo = {});
  // wraps a mode-1 laid out block (rows x (nt*nparam)) as a 3-axis tensor
  static SnapshotTensor from_mode1(Axis row_axis, const Eigen::MatrixXd& m,
                                   Eigen::Index nt, Eigen::Index nparam,
                                   RealizationEcho echo = {});

  int ndims() const { return static_cast<int>(dims_.size()); }
  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<Eigen::Index>& dims() const { return dims_; }
  Eigen::Index extent(int i) const { return dims_[static_cast<size_t>(i)]; }
  Eigen::Index size() const { return data_.size(); }
  const Eigen::VectorXd& data() const { return data_; }
  const RealizationEcho& echo() const { return echo_; }

  double operator()(Eigen::Index i, Eigen::Index j = 0,
                    Eigen::Index k = 0) const;

  /// Mode-1 reshape: rows x (time * param), columns time-fastest then param.
  /// Zero copy; requires axes (space|space_nnz, time, param).
  Eigen::Map<const Eigen::MatrixXd> mode1() const;

  /// Mode-2 reshape: time x (n1 * param), columns reduced-index-fastest. An
  /// axis permutation; requires axes (reduced, time, param).
  Eigen::MatrixXd mode2() const;

  /// Two-axis view (x, param).
  Eigen::Map<const Eigen::MatrixXd> as_matrix() const;

  // inverse of mode1 on a 3-axis tensor (round-trip helper)
  static SnapshotTensor unstack_mode1(std::vector<Axis> axes,
                                      const Eigen::MatrixXd& m,
                                      Eigen::Index nt, Eigen::Index nparam,
                                      RealizationEcho echo = {});

 private:
  std::vector<Axis> axes_;
  std::vector<Eigen::Index> dims_;
  Eigen::VectorXd data_;
  RealizationEcho echo_;
};

/// Binary snapshot file format `RBSN` (little-endian, versioned):
/// magic "RBSN" | u32 version | u8 naxes | naxes x (u8 label, u64 extent) |
/// u32 strategy | u64 seed | u64 p | 2p f64 bounds | payload f64.
void save_snapshot(const std::string& path, const SnapshotTensor& tensor);
SnapshotTensor load_snapshot(const std::string& path);

}  // namespace rbrom
