#include <doctest.h>

#include "testutil.hpp"
#include "treecode/pursuit.hpp"

using namespace treecode;
using namespace testutil;

TEST_SUITE_BEGIN("pursuit");

TEST_CASE("omp recovers an atom of the identity dictionary") {
  Dictionary dict(Mat::Identity(2, 2));
  Vec x(2);
  x << 1.0, 0.0;
  const auto code = omp(x, dict, 1);
  REQUIRE(code.support == std::vector<int>{0});
  // The Gram ridge (1e-10 on the diagonal) shades the coefficient slightly.
  CHECK(code.values[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(*code.reconstruction_error <= 1e-18);
}

TEST_CASE("omp on the zero vector selects nothing") {
  const auto dict = random_dict(5, 7, 1);
  const auto code = omp(Vec::Zero(5), dict, 3);
  CHECK(code.support.empty());
  CHECK(code.values.size() == 0);
  CHECK(*code.reconstruction_error == 0.0);
}

TEST_CASE("omp rejects bad inputs") {
  const auto dict = random_dict(3, 4, 2);
  Rng rng(3);
  CHECK_THROWS_AS(omp(rng.normal_vector(3), dict, 4), std::invalid_argument);  // q > min(d, K)
  Vec bad = rng.normal_vector(3);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(omp(bad, dict, 2), NumericError);
}

// Frozen from the brute-force oracle (seeds 7/11): both numbers agree to
// 1e-15, i.e. omp found the exhaustive optimum on this instance.
TEST_CASE("omp on the seeded 3x4 instance matches the frozen oracle values") {
  const Dictionary dict = random_dict(3, 4, 7);
  Rng rng(11);
  const Vec x = rng.normal_vector(3);

  const auto code = omp(x, dict, 2);
  const auto brute = brute_force_best_support(x, dict, 2);

  const double kFrozenOmpError2 = 0.094806576245474061;
  const double kFrozenOracleMin2 = 0.094806576245474172;
  CHECK(*code.reconstruction_error == doctest::Approx(kFrozenOmpError2).epsilon(1e-12));
  CHECK(brute.best_error2 == doctest::Approx(kFrozenOracleMin2).epsilon(1e-12));
  CHECK(*code.reconstruction_error >= brute.best_error2 - 1e-10);
}

TEST_CASE("omp with q=1 selects the max-correlation atom, smallest index on ties") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const auto dict = random_dict(6, 9, 1000 + seed);
    Rng rng(2000 + seed);
    const Vec x = rng.normal_vector(6);
    const auto code = omp(x, dict, 1);

    int expect = 0;
    double best = -1.0;
    for (int i = 0; i < dict.size(); ++i) {
      const double c = std::abs(dict.atoms.col(i).dot(x));
      if (c > best) {
        best = c;
        expect = i;
      }
    }
    REQUIRE(code.support.size() == 1);
    CHECK(code.support[0] == expect);
  }

  // Exact tie: duplicated atom, the smaller index wins.
  Mat atoms(2, 3);
  atoms.col(0) << 0.0, 1.0;
  atoms.col(1) << 1.0, 0.0;
  atoms.col(2) << 1.0, 0.0;
  Vec x(2);
  x << 1.0, 0.25;
  const auto code = omp(x, Dictionary(atoms), 1);
  CHECK(code.support[0] == 1);
}

TEST_CASE("omp error never beats the exhaustive optimum, and matches it when orthonormal") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const int q = 1 + static_cast<int>(seed % 3);
    Rng rng(500 + seed);
    const Vec x = rng.normal_vector(8);

    const auto dict = random_dict(8, 8, 900 + seed);
    const auto code = omp(x, dict, q);
    const auto brute = brute_force_best_support(x, dict, q);
    CHECK(*code.reconstruction_error >= brute.best_error2 - 1e-10);

    const auto ortho = orthonormal_dict(8, 8, 1300 + seed);
    const auto ocode = omp(x, ortho, q);
    const auto obrute = brute_force_best_support(x, ortho, q);
    CHECK(std::abs(*ocode.reconstruction_error - obrute.best_error2) <=
          1e-9 * (1.0 + obrute.best_error2));
  }
}

TEST_CASE("omp residual trace is nonincreasing and orthogonal to the selected span") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const auto dict = random_dict(10, 20, 40 + seed);
    Rng rng(80 + seed);
    const Vec x = rng.normal_vector(10);

    std::vector<double> trace;
    const auto code = omp(x, dict, 5, &trace);
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i) {
      CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-9) + 1e-12);
    }

    const Vec r = x - reconstruct(dict, code);
    for (int a : code.support) {
      CHECK(std::abs(dict.atoms.col(a).dot(r)) <= 1e-8 * (1.0 + x.norm()));
    }
  }
}

TEST_CASE("somp recovers a single atom exactly") {
  const auto dict = random_dict(6, 8, 12);
  Mat X = dict.atoms.col(3);
  const auto res = somp(X, dict, 1);
  REQUIRE(res.active == std::vector<int>{3});
  CHECK(res.coeffs(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.residual_norm <= 1e-9);
}

TEST_CASE("somp on the zero matrix selects nothing") {
  const auto dict = random_dict(6, 8, 13);
  const auto res = somp(Mat::Zero(6, 4), dict, 3);
  CHECK(res.active.empty());
  CHECK(res.residual_norm == 0.0);
}

TEST_CASE("somp q=1 selection equals the direct argmax of summed correlations") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const auto dict = random_dict(4, 6, 200 + seed);
    const Mat X = random_matrix(4, 5, 300 + seed);
    const auto res = somp(X, dict, 1);

    int expect = 0;
    double best = -1.0;
    for (int i = 0; i < dict.size(); ++i) {
      const double s = (dict.atoms.col(i).transpose() * X).cwiseAbs().sum();
      if (s > best) {
        best = s;
        expect = i;
      }
    }
    REQUIRE(res.active.size() == 1);
    CHECK(res.active[0] == expect);
  }
}

TEST_CASE("somp coefficients solve the shared-support least squares") {
  const auto dict = random_dict(7, 10, 21);
  const Mat X = random_matrix(7, 6, 22);
  std::vector<double> trace;
  const auto res = somp(X, dict, 3, &trace);
  REQUIRE(res.active.size() == 3);
  for (size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-9) + 1e-12);
  }

  Mat W(7, 3);
  for (int j = 0; j < 3; ++j) W.col(j) = dict.atoms.col(res.active[j]);
  for (int n = 0; n < X.cols(); ++n) {
    const Vec z = svd_solve(W, X.col(n));
    CHECK((z - res.coeffs.col(n)).norm() <= 1e-8 * (1.0 + z.norm()));
  }
}

TEST_CASE("solve_on_support basics") {
  const auto dict = random_dict(5, 8, 31);

  // A single atom decodes itself with coefficient one.
  const std::vector<int> single{4};
  const Mat z1 = solve_on_support(dict.atoms.col(4), dict, single);
  CHECK(z1(0, 0) == doctest::Approx(1.0).epsilon(1e-9));

  // x inside the span reconstructs with zero residual.
  const std::vector<int> span{0, 2, 6};
  Vec x = 0.7 * dict.atoms.col(0) - 1.3 * dict.atoms.col(2) + 0.2 * dict.atoms.col(6);
  const Mat z = solve_on_support(x, dict, span);
  Vec rec = Vec::Zero(5);
  for (int j = 0; j < 3; ++j) rec += z(j, 0) * dict.atoms.col(span[j]);
  CHECK((x - rec).norm() <= 1e-9);
}

TEST_CASE("solve_on_support matches the independent SVD solver and is idempotent") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const auto dict = random_dict(9, 14, 600 + seed);
    const Mat X = random_matrix(9, 4, 700 + seed);
    const std::vector<int> support{1, 5, 9, 12};

    const Mat Z = solve_on_support(X, dict, support);
    Mat W(9, 4);
    for (int j = 0; j < 4; ++j) W.col(j) = dict.atoms.col(support[j]);
    for (int n = 0; n < X.cols(); ++n) {
      const Vec z = svd_solve(W, X.col(n));
      CHECK((z - Z.col(n)).norm() <= 1e-8 * (1.0 + z.norm()));
    }

    // Re-solving on the reconstruction reproduces the coefficients.
    const Mat rec = W * Z;
    const Mat Z2 = solve_on_support(rec, dict, support);
    CHECK((Z - Z2).norm() <= 1e-8 * (1.0 + Z.norm()));
  }
}

TEST_CASE("solve_on_support survives a rank-deficient support") {
  Mat atoms(4, 3);
  Rng rng(77);
  atoms.col(0) = rng.unit_vector(4);
  atoms.col(1) = atoms.col(0);  // duplicate atom
  atoms.col(2) = rng.unit_vector(4);
  Dictionary dict(atoms);
  const std::vector<int> support{0, 1, 2};
  const Vec x = rng.normal_vector(4);
  const Mat z = solve_on_support(x, dict, support);
  CHECK(z.allFinite());
}

namespace {

std::vector<SparseCode> codes_from_dense(const Mat& Z) {
  std::vector<SparseCode> codes(Z.cols());
  for (int n = 0; n < Z.cols(); ++n) {
    for (int k = 0; k < Z.rows(); ++k) {
      if (Z(k, n) != 0.0) codes[n].support.push_back(k);
    }
    codes[n].values = Vec(codes[n].support.size());
    for (size_t j = 0; j < codes[n].support.size(); ++j) {
      codes[n].values[static_cast<int>(j)] = Z(codes[n].support[j], n);
    }
  }
  return codes;
}

}  // namespace

TEST_CASE("dictionary_update is a fixed point on exact codes") {
  const auto dict = random_dict(6, 4, 91);
  Mat Z = Mat::Zero(4, 20);
  Rng rng(92);
  for (int n = 0; n < 20; ++n) {
    Z(rng.uniform_int(4), n) = rng.normal();
    Z(rng.uniform_int(4), n) = rng.normal();
  }
  const Mat X = dict.atoms * Z;
  auto codes = codes_from_dense(Z);
  const double before = coding_energy(X, dict, codes);
  REQUIRE(before <= 1e-18);
  const auto updated = dictionary_update(X, codes, dict);
  CHECK(coding_energy(X, updated, codes) <= before + 1e-10);
}

TEST_CASE("dictionary_update single atom with all-ones codes gives the normalized mean") {
  Rng rng(93);
  const Mat X = random_matrix(5, 12, 94);
  Dictionary dict(Mat(rng.unit_vector(5)));
  std::vector<SparseCode> codes(12);
  for (auto& c : codes) {
    c.support = {0};
    c.values = Vec::Ones(1);
  }
  const auto updated = dictionary_update(X, codes, dict);
  Vec mean = X.rowwise().mean();
  mean /= mean.norm();
  CHECK((updated.atoms.col(0) - mean).norm() <= 1e-9);
}

TEST_CASE("dictionary_update decreases energy, preserves W*Z and unused atoms") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto dict = random_dict(8, 12, 800 + seed);
    const Mat X = random_matrix(8, 40, 810 + seed);
    std::vector<SparseCode> codes(40);
    Rng rng(820 + seed);
    for (auto& c : codes) {
      // Atom 11 never appears, so it must stay untouched.
      c.support = {rng.uniform_int(5), 5 + rng.uniform_int(6)};
      c.values = rng.normal_vector(2);
    }
    const double before = coding_energy(X, dict, codes);
    auto rescaled = codes;
    const auto updated = dictionary_update(X, rescaled, dict);
    const double after = coding_energy(X, updated, rescaled);
    CHECK(after <= before * (1.0 + 1e-12) + 1e-12);
    CHECK((updated.atoms.col(11) - dict.atoms.col(11)).norm() == 0.0);
    updated.validate();

    // The rescale is exactly one factor per atom (the pre-normalization
    // column norm), so W * Z is preserved: every occurrence of an atom must
    // carry the same value ratio.
    std::vector<double> atom_scale(12, 0.0);
    for (int n = 0; n < 40; ++n) {
      for (size_t j = 0; j < codes[n].support.size(); ++j) {
        const int atom = codes[n].support[j];
        const double ratio = rescaled[n].values[static_cast<int>(j)] /
                             codes[n].values[static_cast<int>(j)];
        if (atom_scale[atom] == 0.0) {
          atom_scale[atom] = ratio;
        } else {
          CHECK(ratio == doctest::Approx(atom_scale[atom]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("ksvd_update does not increase energy") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto dict = random_dict(8, 10, 860 + seed);
    const Mat X = random_matrix(8, 30, 870 + seed);
    std::vector<SparseCode> codes(30);
    Rng rng(880 + seed);
    for (auto& c : codes) {
      c.support = {rng.uniform_int(5), 5 + rng.uniform_int(5)};
      c.values = rng.normal_vector(2);
    }
    const double before = coding_energy(X, dict, codes);
    auto updated_codes = codes;
    const auto updated = ksvd_update(X, updated_codes, dict);
    const double after = coding_energy(X, updated, updated_codes);
    CHECK(after <= before * (1.0 + 1e-9) + 1e-9);
    updated.validate();
  }
}

TEST_SUITE_END();
