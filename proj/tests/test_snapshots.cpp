#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "rbrom/snapshots.hpp"
#include "rbrom/errors.hpp"

using namespace rbrom;

namespace {

SnapshotTensor index_tensor(Eigen::Index n, Eigen::Index nt, Eigen::Index np,
                            Axis first = Axis::space) {
  Eigen::VectorXd data(n * nt * np);
  for (Eigen::Index k = 0; k < np; ++k)
    for (Eigen::Index j = 0; j < nt; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        data(i + n * (j + nt * k)) = static_cast<double>(i + 10 * j + 100 * k);
  return SnapshotTensor({first, Axis::time, Axis::param}, {n, nt, np},
                        std::move(data));
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("mode-1 columns are ordered time-fastest, then parameter") {
  const SnapshotTensor U = index_tensor(2, 2, 2);
  const auto M = U.mode1();
  REQUIRE(M.rows() == 2);
  REQUIRE(M.cols() == 4);
  // column (j, k) pairs in order (0,0), (1,0), (0,1), (1,1)
  CHECK(M(0, 0) == 0.0);
  CHECK(M(1, 0) == 1.0);
  CHECK(M(0, 1) == 10.0);
  CHECK(M(0, 2) == 100.0);
  CHECK(M(0, 3) == 110.0);
  CHECK(M(1, 3) == 111.0);
}

TEST_CASE("mode-2 rows list (i, k) pairs i-fastest") {
  const SnapshotTensor U = index_tensor(2, 2, 2, Axis::reduced);
  const Eigen::MatrixXd M2 = U.mode2();
  REQUIRE(M2.rows() == 2);            // time
  REQUIRE(M2.cols() == 4);            // n1 * param
  CHECK(M2(0, 0) == 0.0);             // (i=0, k=0) at j=0
  CHECK(M2(0, 1) == 1.0);             // (i=1, k=0)
  CHECK(M2(0, 2) == 100.0);           // (i=0, k=1)
  CHECK(M2(1, 0) == 10.0);            // j=1
  CHECK(M2(1, 3) == 111.0);

  // bijection on entries: the multiset of values is preserved
  std::multiset<double> a(U.data().data(), U.data().data() + U.size());
  std::multiset<double> b(M2.data(), M2.data() + M2.size());
  CHECK(a == b);
}

TEST_CASE("mode-1 round trip is bitwise") {
  const SnapshotTensor U = index_tensor(3, 4, 5);
  const Eigen::MatrixXd M = U.mode1();
  const SnapshotTensor back = SnapshotTensor::unstack_mode1(
      {Axis::space, Axis::time, Axis::param}, M, 4, 5, U.echo());
  CHECK(back.data() == U.data());
  CHECK(back.dims() == U.dims());
}

TEST_CASE("mislabeled tensors are rejected by the reshapes") {
  // axes deliberately permuted: (time, space, param)
  Eigen::VectorXd data = Eigen::VectorXd::LinSpaced(12, 0, 11);
  const SnapshotTensor bad({Axis::time, Axis::space, Axis::param}, {2, 3, 2},
                           data);
  CHECK_THROWS_AS(bad.mode1(), ShapeError);
  CHECK_THROWS_AS(bad.mode2(), ShapeError);
  const SnapshotTensor two = SnapshotTensor::from_matrix(
      Axis::space, Eigen::MatrixXd::Ones(3, 2));
  CHECK_THROWS_AS(two.mode1(), ShapeError);
  // mode-2 needs the contracted (reduced) first axis
  const SnapshotTensor u = index_tensor(2, 2, 2, Axis::space);
  CHECK_THROWS_AS(u.mode2(), ShapeError);
}

TEST_CASE("snapshot io round trips bitwise with labels and echo") {
  SnapshotTensor U = index_tensor(3, 2, 4);
  RealizationEcho echo;
  echo.strategy = Sampling::latin_hypercube;
  echo.seed = 424242;
  echo.bounds.resize(2, 2);
  echo.bounds << 1.0, 3.0, 5.0, 7.0;
  U = SnapshotTensor(U.axes(), U.dims(), U.data(), echo);

  const std::string path = temp_path("rbrom_test_snap.rbsn");
  save_snapshot(path, U);
  const SnapshotTensor V = load_snapshot(path);
  CHECK(V.axes() == U.axes());
  CHECK(V.dims() == U.dims());
  CHECK(V.data() == U.data());
  CHECK(V.echo().strategy == echo.strategy);
  CHECK(V.echo().seed == echo.seed);
  CHECK(V.echo().bounds == echo.bounds);

  // saving the loaded tensor reproduces the file byte-for-byte
  const std::string path2 = temp_path("rbrom_test_snap2.rbsn");
  save_snapshot(path2, V);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)),
                 std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)),
                 std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("snapshot io error taxonomy") {
  CHECK_THROWS_AS(load_snapshot(temp_path("rbrom_no_such_file.rbsn")),
                  NotFoundError);

  const std::string bad = temp_path("rbrom_bad_magic.rbsn");
  {
    std::ofstream os(bad, std::ios::binary);
    os << "NOPE and some more bytes to get past the header reads";
  }
  CHECK_THROWS_AS(load_snapshot(bad), FormatError);
  std::remove(bad.c_str());

  // truncated payload: write a valid tensor, chop the file
  const std::string trunc = temp_path("rbrom_trunc.rbsn");
  save_snapshot(trunc, index_tensor(4, 3, 2));
  {
    std::error_code ec;
    const auto size = std::filesystem::file_size(trunc, ec);
    std::filesystem::resize_file(trunc, size - 9, ec);
  }
  CHECK_THROWS_AS(load_snapshot(trunc), CorruptionError);
  std::remove(trunc.c_str());
}

TEST_CASE("zero-parameter tensor saves as a header-only file") {
  const SnapshotTensor empty({Axis::space, Axis::param}, {5, 0},
                             Eigen::VectorXd());
  const std::string path = temp_path("rbrom_empty.rbsn");
  save_snapshot(path, empty);
  const SnapshotTensor back = load_snapshot(path);
  CHECK(back.size() == 0);
  CHECK(back.dims() == empty.dims());
  std::remove(path.c_str());
}

TEST_CASE("tensor constructor validates shape metadata") {
  CHECK_THROWS_AS(SnapshotTensor({Axis::space}, {3}, Eigen::VectorXd::Zero(4)),
                  ShapeError);
  CHECK_THROWS_AS(
      SnapshotTensor({Axis::space, Axis::param}, {3}, Eigen::VectorXd::Zero(3)),
      ShapeError);
}
