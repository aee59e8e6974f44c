#include "gampkit/linear_operator.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "gampkit/matrix_io.hpp"
#include "gampkit/random.hpp"

namespace {

using namespace gampkit;

Mat random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

Vec random_vector(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

TEST(Operator, ApplyIdentity) {
  DenseOperator op(Mat::Identity(2, 2));
  Vec x(2);
  x << 3.0, -1.5;
  EXPECT_EQ(op.apply(x), x);
  EXPECT_EQ(op.apply_adjoint(x), x);
}

TEST(Operator, ApplySquaredExample) {
  Mat a(2, 2);
  a << 1.0, -2.0, 3.0, 4.0;
  DenseOperator op(a);
  Vec ones = Vec::Ones(2);
  const Vec fwd = op.apply_squared(ones, ApplyDirection::forward);
  EXPECT_DOUBLE_EQ(fwd[0], 5.0);
  EXPECT_DOUBLE_EQ(fwd[1], 25.0);
  const Vec adj = op.apply_squared(ones, ApplyDirection::adjoint);
  EXPECT_DOUBLE_EQ(adj[0], 10.0);
  EXPECT_DOUBLE_EQ(adj[1], 20.0);
}

// all four products against naive triple loops
TEST(Operator, MatchesNaiveLoops) {
  const Mat a = random_matrix(17, 9, 11);
  DenseOperator op(a);
  const Vec x = random_vector(9, 12);
  const Vec s = random_vector(17, 13);

  Vec ax = Vec::Zero(17), ats = Vec::Zero(9), sqx = Vec::Zero(17),
      sqs = Vec::Zero(9);
  for (int m = 0; m < 17; ++m)
    for (int n = 0; n < 9; ++n) {
      ax[m] += a(m, n) * x[n];
      ats[n] += a(m, n) * s[m];
      sqx[m] += a(m, n) * a(m, n) * x[n];
      sqs[n] += a(m, n) * a(m, n) * s[m];
    }
  EXPECT_LT((op.apply(x) - ax).norm() / ax.norm(), 1e-13);
  EXPECT_LT((op.apply_adjoint(s) - ats).norm() / ats.norm(), 1e-13);
  EXPECT_LT((op.apply_squared(x, ApplyDirection::forward) - sqx).norm() / sqx.norm(), 1e-13);
  EXPECT_LT((op.apply_squared(s, ApplyDirection::adjoint) - sqs).norm() / sqs.norm(), 1e-13);
}

TEST(Operator, AdjointConsistency) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Mat a = random_matrix(23, 14, 100 + seed);
    DenseOperator op(a);
    const Vec x = random_vector(14, 200 + seed);
    const Vec s = random_vector(23, 300 + seed);
    const double lhs = op.apply(x).dot(s);
    const double rhs = x.dot(op.apply_adjoint(s));
    EXPECT_LT(std::fabs(lhs - rhs) / std::fabs(rhs), 1e-12);
  }
}

TEST(Operator, UniformFastPath) {
  const Mat a = random_matrix(13, 7, 42);
  DenseOperator op(a);
  const Vec cf = Vec::Constant(7, 0.37);
  const Vec ca = Vec::Constant(13, 2.25);
  const Vec f1 = op.apply_squared(cf, ApplyDirection::forward);
  const Vec f2 = op.apply_squared(cf, ApplyDirection::forward, true);
  const Vec a1 = op.apply_squared(ca, ApplyDirection::adjoint);
  const Vec a2 = op.apply_squared(ca, ApplyDirection::adjoint, true);
  EXPECT_LT((f1 - f2).norm() / f1.norm(), 1e-14);
  EXPECT_LT((a1 - a2).norm() / a1.norm(), 1e-14);
}

TEST(Operator, AugmentSimplex) {
  const Mat a = random_matrix(5, 4, 7);
  const Vec y = random_vector(5, 8);
  Problem p(DenseOperator(a), y, simplex_constraint(4));
  const AugmentedProblem ap = augment(p);

  ASSERT_EQ(ap.op.rows(), 6u);
  ASSERT_EQ(ap.op.cols(), 4u);
  EXPECT_EQ(ap.boundary, 5u);
  // original block is preserved bit-exactly
  EXPECT_TRUE(ap.op.matrix().topRows(5) == a);
  EXPECT_TRUE(ap.obs.head(5) == y);
  EXPECT_TRUE((ap.op.matrix().row(5).array() == 1.0).all());
  EXPECT_EQ(ap.obs[5], 1.0);
}

TEST(Operator, AugmentPortfolio) {
  const Mat a = random_matrix(6, 3, 9);
  const Vec y = random_vector(6, 10);
  Vec mu(3);
  mu << 0.01, 0.02, -0.005;
  const double rho = mu.mean();
  Problem p(DenseOperator(a), y, portfolio_constraint(mu, rho));
  const AugmentedProblem ap = augment(p);

  ASSERT_EQ(ap.op.rows(), 8u);
  EXPECT_EQ(ap.boundary, 6u);
  EXPECT_TRUE(ap.op.matrix().row(6).transpose() == mu);
  EXPECT_TRUE((ap.op.matrix().row(7).array() == 1.0).all());
  EXPECT_EQ(ap.obs[6], rho);
  EXPECT_EQ(ap.obs[7], 1.0);
}

TEST(Operator, AugmentWithoutConstraint) {
  const Mat a = random_matrix(4, 3, 20);
  const Vec y = random_vector(4, 21);
  Problem p(DenseOperator(a), y);
  const AugmentedProblem ap = augment(p);
  EXPECT_EQ(ap.boundary, 4u);
  EXPECT_EQ(ap.op.rows(), 4u);
  EXPECT_TRUE(ap.obs == y);
}

TEST(Operator, Validation) {
  Mat bad(1, 1);
  bad << std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(DenseOperator{bad}, std::invalid_argument);

  const Mat a = random_matrix(3, 2, 30);
  EXPECT_THROW(Problem(DenseOperator(a), random_vector(4, 31)), std::invalid_argument);
  EXPECT_THROW(Problem(DenseOperator(a), random_vector(3, 31), simplex_constraint(5)),
               std::invalid_argument);
  EXPECT_THROW(EqualityConstraint(Mat::Ones(2, 3), Vec::Ones(1)), std::invalid_argument);

  DenseOperator op(a);
  EXPECT_THROW(op.apply(random_vector(3, 32)), std::invalid_argument);
  EXPECT_THROW(op.apply_adjoint(random_vector(2, 33)), std::invalid_argument);
}

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "gampkit_io_test";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const char* name) { return (dir_ / name).string(); }
  std::filesystem::path dir_;
};

TEST_F(IoTest, CsvRoundTripExact) {
  for (auto [r, c] : std::vector<std::pair<int, int>>{{1, 1}, {1, 5}, {4, 1}, {6, 3}}) {
    const Mat m = random_matrix(r, c, 1000 + r * 10 + c);
    save_matrix_csv(path("m.csv"), m);
    const Mat back = load_matrix_csv(path("m.csv"));
    ASSERT_EQ(back.rows(), m.rows());
    ASSERT_EQ(back.cols(), m.cols());
    EXPECT_TRUE(back == m);
  }
}

TEST_F(IoTest, CsvHeaderDetected) {
  {
    std::ofstream out(path("h.csv"));
    out << "alpha,beta\n1.5,2.5\n3.5,4.5\n";
  }
  const Mat m = load_matrix_csv(path("h.csv"));
  ASSERT_EQ(m.rows(), 2);
  EXPECT_EQ(m(0, 0), 1.5);
  EXPECT_EQ(m(1, 1), 4.5);
}

TEST_F(IoTest, CsvErrors) {
  {
    std::ofstream out(path("ragged.csv"));
    out << "1,2\n3,4,5\n";
  }
  EXPECT_THROW(load_matrix_csv(path("ragged.csv")), std::runtime_error);

  {
    std::ofstream out(path("nonnum.csv"));
    out << "1,2\n3,oops\n";
  }
  try {
    load_matrix_csv(path("nonnum.csv"));
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("field 2"), std::string::npos);
  }

  {
    std::ofstream out(path("empty.csv"));
  }
  EXPECT_THROW(load_matrix_csv(path("empty.csv")), std::runtime_error);
}

TEST_F(IoTest, VectorShapes) {
  save_matrix_csv(path("col.csv"), Vec::LinSpaced(4, 1.0, 4.0));
  EXPECT_EQ(load_vector_csv(path("col.csv")).size(), 4);

  {
    std::ofstream out(path("row.csv"));
    out << "1,2,3\n";
  }
  EXPECT_EQ(load_vector_csv(path("row.csv")).size(), 3);

  save_matrix_csv(path("mat.csv"), random_matrix(2, 3, 50));
  EXPECT_THROW(load_vector_csv(path("mat.csv")), std::runtime_error);
}

TEST_F(IoTest, BinaryRoundTripExact) {
  Mat m = random_matrix(5, 7, 60);
  m(0, 0) = -0.0;
  m(1, 1) = 1e-310;
  m(2, 2) = 1.7e308;
  save_matrix_bin(path("m.bin"), m);
  const Mat back = load_matrix_bin(path("m.bin"));
  ASSERT_EQ(back.rows(), 5);
  ASSERT_EQ(back.cols(), 7);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 7; ++j)
      EXPECT_EQ(std::memcmp(&back(i, j), &m(i, j), 8), 0) << i << "," << j;
}

TEST_F(IoTest, BinaryGoldenBytes) {
  Mat m(1, 1);
  m << 2.5;
  save_matrix_bin(path("g.bin"), m);
  std::ifstream in(path("g.bin"), std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::vector<unsigned char> want = {
      'G', 'M', 'P', 'K', '1',
      1, 0, 0, 0, 0, 0, 0, 0,
      1, 0, 0, 0, 0, 0, 0, 0,
      0, 0, 0, 0, 0, 0, 0x04, 0x40};
  EXPECT_EQ(bytes, want);
}

TEST_F(IoTest, BinaryBadMagic) {
  {
    std::ofstream out(path("bad.bin"), std::ios::binary);
    out << "NOPE!" << std::string(16, '\0');
  }
  EXPECT_THROW(load_matrix_bin(path("bad.bin")), std::runtime_error);
}

TEST_F(IoTest, BinaryTruncated) {
  Mat m = random_matrix(3, 3, 70);
  save_matrix_bin(path("t.bin"), m);
  std::filesystem::resize_file(path("t.bin"), 40);
  EXPECT_THROW(load_matrix_bin(path("t.bin")), std::runtime_error);
}

TEST(Random, DeterministicStreams) {
  Rng a(derive_seed(99, 3, 7));
  Rng b(derive_seed(99, 3, 7));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());

  Rng c(derive_seed(99, 3, 8));
  bool same = true;
  Rng a2(derive_seed(99, 3, 7));
  for (int i = 0; i < 10; ++i) same = same && (a2.normal() == c.normal());
  EXPECT_FALSE(same);
}

TEST(Random, MomentsSanity) {
  Rng rng(1234);
  const int n = 200000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s1 += x;
    s2 += x * x;
  }
  EXPECT_LT(std::fabs(s1 / n), 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);

  double g1 = 0;
  for (int i = 0; i < n; ++i) g1 += rng.gamma(2.5);
  EXPECT_NEAR(g1 / n, 2.5, 0.03);

  auto d = rng.dirichlet(1.0, 5);
  double sum = 0;
  for (double v : d) {
    EXPECT_GT(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Random, SampleIndices) {
  Rng rng(5);
  auto idx = rng.sample_indices(100, 30);
  ASSERT_EQ(idx.size(), 30u);
  for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_LT(idx[i - 1], idx[i]);
  EXPECT_LT(idx.back(), 100u);
}

}  // namespace
