#include <random>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "mcdode/tensor.hpp"
#include "test_support.hpp"

using namespace mcdode;

TEST_CASE("spmv against identity and the two-link observation rows") {
  const SparseMatrix id = SparseMatrix::identity(3);
  const std::vector<double> v = {1.0, -2.0, 3.5};
  CHECK(id.multiply(v) == v);
  CHECK(id.multiply_transpose(v) == v);

  // L rows {(1,1)} and {(2,1),(2,2)} applied to link flows
  const SparseMatrix l = SparseMatrix::assemble(
      {{0, 0, 1.0}, {1, 0, 0.0}, {1, 1, 1.0}}, 2, 3);
  const std::vector<double> x = {50.0, 70.0, 80.0};
  const std::vector<double> y = l.multiply(x);
  CHECK(y[0] == 50.0);
  CHECK(y[1] == 70.0);
}

TEST_CASE("random spmv matches the dense oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<Triplet> trip;
  for (int n = 0; n < 120; ++n)
    trip.push_back({static_cast<int>(rng() % 20),
                    static_cast<int>(rng() % 30), unif(rng)});
  const SparseMatrix m = SparseMatrix::assemble(trip, 20, 30);
  const auto dense = test_support::densify(m);

  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> v(30);
    for (double &x : v) x = unif(rng);
    const std::vector<double> got = m.multiply(v);
    const std::vector<double> want = test_support::dense_multiply(dense, v);
    for (int r = 0; r < 20; ++r)
      CHECK(got[r] == Catch::Approx(want[r]).margin(1e-12).epsilon(1e-12));
  }
}

TEST_CASE("spmv_t equals transpose-then-multiply") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<Triplet> trip, trip_t;
  for (int n = 0; n < 80; ++n) {
    const int r = static_cast<int>(rng() % 15);
    const int c = static_cast<int>(rng() % 25);
    const double v = unif(rng);
    trip.push_back({r, c, v});
    trip_t.push_back({c, r, v});
  }
  const SparseMatrix m = SparseMatrix::assemble(trip, 15, 25);
  const SparseMatrix mt = SparseMatrix::assemble(trip_t, 25, 15);

  // unit-vector definition of the transpose product
  for (int j = 0; j < 15; ++j) {
    std::vector<double> e(15, 0.0);
    e[j] = 1.0;
    const std::vector<double> row = m.multiply_transpose(e);
    const auto dense = test_support::densify(m);
    for (int k = 0; k < 25; ++k) CHECK(row[k] == dense[j][k]);
  }

  std::vector<double> v(15);
  for (double &x : v) x = unif(rng);
  CHECK(m.multiply_transpose(v) == mt.multiply(v));
}

TEST_CASE("assembly sums duplicates and validates indices") {
  const SparseMatrix empty = SparseMatrix::assemble({}, 4, 4);
  CHECK(empty.nnz() == 0);
  const std::vector<double> ones(4, 1.0);
  CHECK(empty.multiply(ones) == std::vector<double>(4, 0.0));

  const SparseMatrix dup =
      SparseMatrix::assemble({{0, 0, 0.3}, {0, 0, 0.7}}, 1, 1);
  CHECK(dup.nnz() == 1);
  const std::vector<double> one = {1.0};
  CHECK(dup.multiply(one)[0] == 1.0);

  CHECK_THROWS_AS(SparseMatrix::assemble({{2, 0, 1.0}}, 2, 2),
                  std::out_of_range);
  CHECK_THROWS_AS(SparseMatrix::assemble({{0, 0, std::nan("")}}, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("DAR entry placement follows the vectorization layout") {
  // rho for (k, a, h1, h2) sits at [(h2)|A| + a, (h1)Pi + k], 0-based
  const LayoutSpec layout{3, 7, 3, 1};
  const int a = 2, k = 1, h1 = 0, h2 = 2;
  const SparseMatrix rho = SparseMatrix::assemble(
      {{layout.link_index(h2, a), layout.path_index(h1, k), 0.25}},
      layout.link_size(), layout.path_size());
  const auto trip = rho.to_triplets();
  REQUIRE(trip.size() == 1);
  CHECK(trip[0].row == h2 * 7 + a);
  CHECK(trip[0].col == h1 * 3 + k);
}

TEST_CASE("layout flatten/unflatten round trip for all roles") {
  const LayoutSpec layout{4, 5, 6, 2};
  for (int h = 0; h < 4; ++h) {
    for (int rs = 0; rs < 2; ++rs)
      CHECK(layout.od_unindex(layout.od_index(h, rs)) ==
            std::pair<int, int>{h, rs});
    for (int k = 0; k < 6; ++k)
      CHECK(layout.path_unindex(layout.path_index(h, k)) ==
            std::pair<int, int>{h, k});
    for (int a = 0; a < 5; ++a)
      CHECK(layout.link_unindex(layout.link_index(h, a)) ==
            std::pair<int, int>{h, a});
  }
}

TEST_CASE("debug dump is row-major triplet text") {
  const SparseMatrix m =
      SparseMatrix::assemble({{1, 0, 2.0}, {0, 1, 1.5}}, 2, 2);
  std::ostringstream os;
  m.dump(os);
  CHECK(os.str() == "0 1 1.5\n1 0 2\n");
}
