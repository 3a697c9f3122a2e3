#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lowrank/dense_linalg.hpp"
#include "lowrank/rng.hpp"

using namespace lowrank;

namespace {

Matrix rank_r_matrix(SeededRng& rng, Index rows, Index cols, Index r,
                     double scale = 1.0) {
  return scale * (rng.gaussian_matrix(rows, r) * rng.gaussian_matrix(r, cols));
}

}  // namespace

TEST_CASE("svd of a diagonal matrix") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  const auto f = svd(a);
  REQUIRE(f.s(0) == Catch::Approx(3.0).margin(1e-12));
  REQUIRE(f.s(1) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(f.s(2) == Catch::Approx(1.0).margin(1e-12));
  // Diagonal input with the sign convention pins U and V to the identity.
  REQUIRE((f.u - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((f.v - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("svd of the zero matrix") {
  const Matrix a = Matrix::Zero(2, 3);
  const auto f = svd(a);
  REQUIRE(f.s.size() == 2);
  REQUIRE(f.s.maxCoeff() == 0.0);
  REQUIRE(f.reconstruct().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("svd factor invariants on random matrices") {
  SeededRng rng(11, 0);
  for (const auto& [rows, cols] : {std::pair<Index, Index>{50, 30},
                                  {30, 50},
                                  {17, 17},
                                  {1, 9},
                                  {9, 1}}) {
    const Matrix a = rng.gaussian_matrix(rows, cols);
    const auto f = svd(a);
    const Index k = std::min(rows, cols);
    REQUIRE(f.s.size() == k);
    for (Index i = 0; i + 1 < k; ++i) REQUIRE(f.s(i) >= f.s(i + 1));
    REQUIRE(f.s(k - 1) >= 0.0);
    REQUIRE((f.u.transpose() * f.u - Matrix::Identity(k, k))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    REQUIRE((f.v.transpose() * f.v - Matrix::Identity(k, k))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    REQUIRE((f.reconstruct() - a).norm() <= 1e-8 * std::max(1.0, a.norm()));
  }
}

TEST_CASE("svd sign convention makes the factorization reproducible") {
  SeededRng rng(12, 0);
  const Matrix a = rng.gaussian_matrix(20, 12);
  const auto f1 = svd(a);
  const auto f2 = svd(a);
  REQUIRE(f1.u == f2.u);
  REQUIRE(f1.v == f2.v);
  for (Index j = 0; j < f1.u.cols(); ++j) {
    Index arg = 0;
    f1.u.col(j).cwiseAbs().maxCoeff(&arg);
    REQUIRE(f1.u(arg, j) >= 0.0);
  }
}

TEST_CASE("numerical rank") {
  SeededRng rng(13, 0);
  const Matrix a = rank_r_matrix(rng, 14, 10, 3);
  REQUIRE(numerical_rank(a) == 3);
  REQUIRE(numerical_rank(Matrix(Matrix::Zero(4, 4))) == 0);
  REQUIRE(numerical_rank(Matrix(Matrix::Identity(5, 5))) == 5);
}

TEST_CASE("truncate_rank hand cases") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  const Matrix t = truncate_rank(a, 2);
  Matrix want = a;
  want(2, 2) = 0.0;
  REQUIRE((t - want).cwiseAbs().maxCoeff() < 1e-12);

  SeededRng rng(14, 0);
  const Matrix b = rng.gaussian_matrix(9, 7);
  REQUIRE((truncate_rank(b, 7) - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("truncate_rank argument validation") {
  const Matrix a = Matrix::Identity(4, 3);
  REQUIRE_THROWS_AS(truncate_rank(a, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(truncate_rank(a, -1), std::invalid_argument);
  REQUIRE_THROWS_AS(truncate_rank(a, 4), std::invalid_argument);
}

TEST_CASE("truncation residual matches the discarded spectrum") {
  SeededRng rng(15, 0);
  const Matrix a = rng.gaussian_matrix(8, 6);
  const auto f = svd(a);
  const Matrix t = truncate_rank(a, 3);
  double tail = 0.0;
  for (Index i = 3; i < f.s.size(); ++i) tail += f.s(i) * f.s(i);
  REQUIRE((a - t).squaredNorm() == Catch::Approx(tail).margin(1e-9));
}

TEST_CASE("rank-r truncation beats random rank-r candidates") {
  SeededRng rng(16, 0);
  for (int inst = 0; inst < 5; ++inst) {
    const Matrix a = rng.gaussian_matrix(10, 8);
    for (int r = 1; r <= 4; ++r) {
      const double best = (a - truncate_rank(a, r)).norm();
      for (int k = 0; k < 200; ++k) {
        const double scale = std::pow(10.0, rng.uniform(-1.0, 1.0));
        const Matrix cand = rank_r_matrix(rng, 10, 8, r, scale);
        REQUIRE(best <= (a - cand).norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("objective is nonincreasing in the allowed rank") {
  SeededRng rng(17, 0);
  const Matrix a = rng.gaussian_matrix(12, 9);
  double prev = (a - truncate_rank(a, 1)).norm();
  for (int r = 2; r <= 9; ++r) {
    const double cur = (a - truncate_rank(a, r)).norm();
    REQUIRE(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("pinv hand cases") {
  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = 1.0;
  REQUIRE((pinv(p) - p).cwiseAbs().maxCoeff() < 1e-12);

  SeededRng rng(18, 0);
  const Matrix a = rng.gaussian_matrix(3, 3);
  REQUIRE((a * pinv(a) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);

  const Matrix x = rng.gaussian_matrix(5, 3);
  REQUIRE((pinv(x) * x - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("penrose identities, including rank-deficient input") {
  SeededRng rng(19, 0);
  const Matrix full = rng.gaussian_matrix(7, 5);
  const Matrix lowrank_a = rank_r_matrix(rng, 7, 5, 2);
  for (const Matrix& a : {full, lowrank_a}) {
    const Matrix ap = pinv(a);
    REQUIRE((a * ap * a - a).norm() <= 1e-8 * std::max(1.0, a.norm()));
    REQUIRE((ap * a * ap - ap).norm() <= 1e-8 * std::max(1.0, ap.norm()));
    REQUIRE(((a * ap) - (a * ap).transpose()).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(((ap * a) - (ap * a).transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }
  REQUIRE(pinv(Matrix::Zero(3, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pinv double application returns the original") {
  SeededRng rng(20, 0);
  const Matrix a = rng.gaussian_matrix(6, 4);
  REQUIRE((pinv(pinv(a)) - a).norm() <= 1e-8 * a.norm());
}

TEST_CASE("pinv rcond override zeroes small directions") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1e-6;
  const Matrix strict = pinv(a, 1e-3);
  REQUIRE(strict(0, 0) == Catch::Approx(1.0));
  REQUIRE(strict(1, 1) == 0.0);
  const Matrix loose = pinv(a);
  REQUIRE(loose(1, 1) == Catch::Approx(1e6));
}

TEST_CASE("gram square root pair") {
  const Matrix x = std::sqrt(2.0) * Matrix::Identity(3, 3);
  const auto [s, s_inv] = gram_sqrt_pair(x);
  REQUIRE((s - std::sqrt(2.0) * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-12);
  REQUIRE((s_inv - Matrix::Identity(3, 3) / std::sqrt(2.0))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

  SeededRng rng(21, 0);
  const Matrix g = rng.gaussian_matrix(20, 5);
  const auto [sg, sg_inv] = gram_sqrt_pair(g);
  const Matrix gram = g.transpose() * g;
  REQUIRE((sg * sg - gram).norm() <= 1e-8 * gram.norm());
  REQUIRE((sg - sg.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE((sg * sg_inv - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);

  // Orthonormal columns give the identity square root.
  Matrix q = Matrix::Zero(6, 2);
  q(0, 0) = 1.0;
  q(3, 1) = 1.0;
  const auto [sq, sq_inv] = gram_sqrt_pair(q);
  REQUIRE((sq - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gram square root rejects rank deficiency") {
  SeededRng rng(22, 0);
  REQUIRE_THROWS_AS(gram_sqrt_pair(rng.gaussian_matrix(3, 5)),
                    RankDeficientError);
  Matrix x = rng.gaussian_matrix(8, 3);
  x.col(2) = x.col(0) + x.col(1);
  REQUIRE_THROWS_AS(gram_sqrt_pair(x), RankDeficientError);
  REQUIRE_THROWS_AS(gram_sqrt_pair(Matrix::Zero(4, 2)), RankDeficientError);
}

TEST_CASE("norms hand values") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 2.0;
  a(2, 2) = 1.0;
  const auto n = norms(a);
  REQUIRE(n.frobenius == Catch::Approx(std::sqrt(14.0)).epsilon(1e-12));
  REQUIRE(n.op == Catch::Approx(3.0).epsilon(1e-12));
  REQUIRE(n.nuclear == Catch::Approx(6.0).epsilon(1e-12));
  REQUIRE(n.max_abs == Catch::Approx(3.0).epsilon(1e-12));

  const Matrix ones = Matrix::Ones(4, 4);
  const auto m = norms(ones);
  REQUIRE(m.frobenius == Catch::Approx(4.0).epsilon(1e-12));
  REQUIRE(m.op == Catch::Approx(4.0).epsilon(1e-12));
  REQUIRE(m.nuclear == Catch::Approx(4.0).margin(1e-10));
  REQUIRE(m.max_abs == 1.0);
}

TEST_CASE("norm ordering on random matrices") {
  SeededRng rng(23, 0);
  for (int k = 0; k < 20; ++k) {
    const Matrix a = rng.gaussian_matrix(9, 6);
    const auto n = norms(a);
    const double rank = static_cast<double>(numerical_rank(a));
    REQUIRE(n.op <= n.frobenius + 1e-10);
    REQUIRE(n.frobenius <= n.nuclear + 1e-10);
    REQUIRE(n.nuclear <= std::sqrt(rank) * n.frobenius + 1e-10);
  }
}

TEST_CASE("nuclear-to-sup rank surrogate") {
  REQUIRE(is_approx_rank(Matrix::Ones(4, 4), 1));  // equality: 4 <= 1*sqrt(16)
  REQUIRE(is_approx_rank(Matrix::Zero(3, 3), 1));
  REQUIRE(is_approx_rank(Matrix::Identity(9, 9), 1));  // equality: 9 <= 1*sqrt(81)
  REQUIRE(is_approx_rank(Matrix::Identity(9, 9), 9));

  // Scaled 45-degree rotation: nuclear 2 vs budget sqrt(1/2)*sqrt(r*4).
  Matrix rot(2, 2);
  rot << 1.0, -1.0, 1.0, 1.0;
  rot *= std::sqrt(0.5);
  REQUIRE_FALSE(is_approx_rank(rot, 1));  // 2 > sqrt(2)
  REQUIRE(is_approx_rank(rot, 2));        // equality: 2 <= 2

  SeededRng rng(24, 0);
  const Matrix y = rank_r_matrix(rng, 4, 4, 2);
  REQUIRE(is_approx_rank(y, 2));
}
