#include "rbrom/snapshots.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "rbrom/errors.hpp"
#include "rbrom/stats.hpp"

static_assert(std::endian::native == std::endian::little,
              "RBSN io assumes a little-endian host");

namespace rbrom {

RealizationEcho echo_of(const Realization& r) {
  return {r.strategy, r.seed, r.bounds};
}

SnapshotTensor::SnapshotTensor(std::vector<Axis> axes,
                               std::vector<Eigen::Index> dims,
                               Eigen::VectorXd data, RealizationEcho echo)
    : axes_(std::move(axes)),
      dims_(std::move(dims)),
      data_(std::move(data)),
      echo_(std::move(echo)) {
  if (axes_.size() != dims_.size())
    throw ShapeError("tensor needs one label per axis");
  Eigen::Index n = 1;
  for (auto d : dims_) n *= d;
  if (n != data_.size() && !(n == 0 && data_.size() == 0))
    throw ShapeError("tensor data length does not match its dims");
  mem::note(sizeof(double) * static_cast<size_t>(data_.size()));
}

SnapshotTensor SnapshotTensor::from_matrix(Axis row_axis,
                                           const Eigen::MatrixXd& m,
                                           RealizationEcho echo) {
  Eigen::VectorXd flat =
      Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  return SnapshotTensor({row_axis, Axis::param}, {m.rows(), m.cols()},
                        std::move(flat), std::move(echo));
}

SnapshotTensor SnapshotTensor::from_mode1(Axis row_axis,
                                          const Eigen::MatrixXd& m,
                                          Eigen::Index nt, Eigen::Index nparam,
                                          RealizationEcho echo) {
  if (m.cols() != nt * nparam)
    throw ShapeError("mode-1 block has the wrong number of columns");
  Eigen::VectorXd flat =
      Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  return SnapshotTensor({row_axis, Axis::time, Axis::param},
                        {m.rows(), nt, nparam}, std::move(flat),
                        std::move(echo));
}

SnapshotTensor SnapshotTensor::unstack_mode1(std::vector<Axis> axes,
                                             const Eigen::MatrixXd& m,
                                             Eigen::Index nt,
                                             Eigen::Index nparam,
                                             RealizationEcho echo) {
  if (axes.size() != 3) throw ShapeError("unstack_mode1 builds 3-axis tensors");
  Eigen::VectorXd flat =
      Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  return SnapshotTensor(std::move(axes), {m.rows(), nt, nparam},
                        std::move(flat), std::move(echo));
}

double SnapshotTensor::operator()(Eigen::Index i, Eigen::Index j,
                                  Eigen::Index k) const {
  Eigen::Index idx = i;
  if (ndims() > 1) idx += dims_[0] * j;
  if (ndims() > 2) idx += dims_[0] * dims_[1] * k;
  return data_(idx);
}

Eigen::Map<const Eigen::MatrixXd> SnapshotTensor::mode1() const {
  const bool ok = ndims() == 3 &&
                  (axes_[0] == Axis::space || axes_[0] == Axis::space_nnz) &&
                  axes_[1] == Axis::time && axes_[2] == Axis::param;
  if (!ok)
    throw ShapeError("mode-1 reshape requires axes (space, time, param)");
  return {data_.data(), dims_[0], dims_[1] * dims_[2]};
}

Eigen::MatrixXd SnapshotTensor::mode2() const {
  const bool ok = ndims() == 3 && axes_[0] == Axis::reduced &&
                  axes_[1] == Axis::time && axes_[2] == Axis::param;
  if (!ok)
    throw ShapeError("mode-2 reshape requires axes (reduced, time, param)");
  const Eigen::Index n1 = dims_[0], nt = dims_[1], np = dims_[2];
  Eigen::MatrixXd out(nt, n1 * np);
  for (Eigen::Index k = 0; k < np; ++k)
    for (Eigen::Index j = 0; j < nt; ++j)
      for (Eigen::Index i = 0; i < n1; ++i)
        out(j, i + n1 * k) = data_(i + n1 * (j + nt * k));
  mem::note(sizeof(double) * static_cast<size_t>(out.size()));
  return out;
}

Eigen::Map<const Eigen::MatrixXd> SnapshotTensor::as_matrix() const {
  if (ndims() != 2 || axes_[1] != Axis::param)
    throw ShapeError("matrix view requires axes (x, param)");
  return {data_.data(), dims_[0], dims_[1]};
}

namespace {

constexpr char kMagic[4] = {'R', 'B', 'S', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CorruptionError("snapshot file truncated");
  return v;
}

}  // namespace

void save_snapshot(const std::string& path, const SnapshotTensor& tensor) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw NotFoundError("cannot open for writing: " + path);
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<std::uint8_t>(tensor.ndims()));
  for (int i = 0; i < tensor.ndims(); ++i) {
    put(os, static_cast<std::uint8_t>(tensor.axes()[static_cast<size_t>(i)]));
    put(os, static_cast<std::uint64_t>(tensor.extent(i)));
  }
  const auto& echo = tensor.echo();
  put(os, static_cast<std::uint32_t>(echo.strategy));
  put(os, static_cast<std::uint64_t>(echo.seed));
  put(os, static_cast<std::uint64_t>(echo.bounds.cols()));
  for (Eigen::Index d = 0; d < echo.bounds.cols(); ++d) {
    put(os, echo.bounds(0, d));
    put(os, echo.bounds(1, d));
  }
  os.write(reinterpret_cast<const char*>(tensor.data().data()),
           static_cast<std::streamsize>(sizeof(double) *
                                        static_cast<size_t>(tensor.size())));
  if (!os) throw CorruptionError("short write: " + path);
}

SnapshotTensor load_snapshot(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw NotFoundError("no such snapshot file: " + path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("cannot open: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not an RBSN file: " + path);
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion)
    throw FormatError("unsupported RBSN version " + std::to_string(version));

  const auto naxes = get<std::uint8_t>(is);
  std::vector<Axis> axes;
  std::vector<Eigen::Index> dims;
  Eigen::Index total = 1;
  for (int i = 0; i < naxes; ++i) {
    const auto label = get<std::uint8_t>(is);
    if (label > 4) throw FormatError("unknown axis label code");
    axes.push_back(static_cast<Axis>(label));
    const auto extent = get<std::uint64_t>(is);
    dims.push_back(static_cast<Eigen::Index>(extent));
    total *= static_cast<Eigen::Index>(extent);
  }

  RealizationEcho echo;
  const auto strat = get<std::uint32_t>(is);
  if (strat > 4) throw FormatError("unknown sampling strategy code");
  echo.strategy = static_cast<Sampling>(strat);
  echo.seed = get<std::uint64_t>(is);
  const auto p = get<std::uint64_t>(is);
  echo.bounds.resize(2, static_cast<Eigen::Index>(p));
  for (std::uint64_t d = 0; d < p; ++d) {
    echo.bounds(0, static_cast<Eigen::Index>(d)) = get<double>(is);
    echo.bounds(1, static_cast<Eigen::Index>(d)) = get<double>(is);
  }

  Eigen::VectorXd data(total);
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(sizeof(double) *
                                       static_cast<size_t>(total)));
  if (!is) throw CorruptionError("snapshot payload truncated: " + path);
  return SnapshotTensor(std::move(axes), std::move(dims), std::move(data),
                        std::move(echo));
}

}  // namespace rbrom
