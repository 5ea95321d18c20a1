#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "tns/verify.hpp"

using namespace tns;

TEST(Index, FirstIndexFastest) {
    const Dims dims{2, 3};
    EXPECT_EQ(linear_index(std::vector<Index>{1, 1}, dims), 1);
    EXPECT_EQ(linear_index(std::vector<Index>{2, 1}, dims), 2);
    EXPECT_EQ(linear_index(std::vector<Index>{1, 2}, dims), 3);
    EXPECT_EQ(linear_index(std::vector<Index>{2, 3}, dims), 6);
}

TEST(Index, RoundTrip) {
    const Dims dims{3, 1, 4, 2};
    for (Index l = 1; l <= num_entries(dims); ++l) EXPECT_EQ(linear_index(multi_index(l, dims), dims), l);
}

TEST(Index, OutOfRange) {
    const Dims dims{2, 3};
    EXPECT_THROW(linear_index(std::vector<Index>{0, 1}, dims), IndexError);
    EXPECT_THROW(linear_index(std::vector<Index>{1, 4}, dims), IndexError);
    EXPECT_THROW(linear_index(std::vector<Index>{1}, dims), IndexError);
    EXPECT_THROW(multi_index(7, dims), IndexError);
}

TEST(Tensor, MatchesEigenColumnMajor) {
    DenseMatrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const auto t = DenseTensor::from_matrix(m);
    EXPECT_EQ(t.at(std::vector<Index>{1, 2}), 6.0);
    EXPECT_EQ(t[1], 4.0);
    EXPECT_EQ(DenseMatrix(t.reshaped(2, 3)), m);
}

TEST(Tensor, ConstructionErrors) {
    EXPECT_THROW(DenseTensor(Dims{2, 0}), ShapeError);
    EXPECT_THROW(DenseTensor(Dims{2, 2}, Eigen::VectorXd::Zero(3)), ShapeError);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
    v[2] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(DenseTensor(Dims{2, 2}, v), NonFiniteError);
}

TEST(Tensor, ScalarTensor) {
    DenseTensor s;
    EXPECT_EQ(s.order(), 0);
    EXPECT_EQ(s.size(), 1);
}

TEST(Tensor, PermuteMatchesLoops) {
    const auto t = random_normal({2, 3, 4}, 5);
    const std::vector<Index> perm{2, 0, 1};
    const auto p = permute(t, perm);
    ASSERT_EQ(p.dims(), (Dims{4, 2, 3}));
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            for (Index k = 0; k < 4; ++k)
                EXPECT_EQ(p.at(std::vector<Index>{k, i, j}), t.at(std::vector<Index>{i, j, k}));
    EXPECT_THROW(permute(t, std::vector<Index>{0, 0, 1}), ModeError);
    EXPECT_THROW(permute(t, std::vector<Index>{0, 1}), ModeError);
}

TEST(Tensor, UnfoldRefoldRoundTrip) {
    const auto t = random_normal({2, 3, 4, 5}, 6);
    const std::vector<Index> rows{3, 1}, cols{0, 2};
    const DenseMatrix m = unfold(t, rows, cols);
    ASSERT_EQ(m.rows(), 15);
    ASSERT_EQ(m.cols(), 8);
    // Row (l, j) -> l + 5 j, column (i, k) -> i + 2 k.
    EXPECT_EQ(m(4 + 5 * 2, 1 + 2 * 3), t.at(std::vector<Index>{1, 2, 3, 4}));
    EXPECT_EQ(refold(m, rows, cols, t.dims()), t);
}

TEST(Tensor, SliceAndTrace) {
    const auto t = random_normal({3, 4, 3}, 7);
    const auto s = slice(t, 1, 2);
    ASSERT_EQ(s.dims(), (Dims{3, 3}));
    EXPECT_EQ(s.at(std::vector<Index>{1, 2}), t.at(std::vector<Index>{1, 2, 2}));

    const auto tr = trace(t, 0, 2);
    ASSERT_EQ(tr.dims(), (Dims{4}));
    for (Index j = 0; j < 4; ++j) {
        double sum = 0.0;
        for (Index i = 0; i < 3; ++i) sum += t.at(std::vector<Index>{i, j, i});
        EXPECT_NEAR(tr[j], sum, 1e-14);
    }
    EXPECT_THROW(trace(t, 0, 1), ShapeError);
    EXPECT_THROW(slice(t, 3, 0), ModeError);
}

TEST(Products, KhatriRaoMatchesOracle) {
    const DenseMatrix a = DenseMatrix::Random(3, 4), b = DenseMatrix::Random(5, 4);
    EXPECT_TRUE(khatri_rao(a, b).isApprox(oracle::khatri_rao(a, b), 1e-15));
    EXPECT_THROW(khatri_rao(a, DenseMatrix::Random(5, 3)), ShapeError);
}

TEST(Products, KroneckerAndHadamard) {
    DenseMatrix a(2, 2), b(1, 2);
    a << 1, 2, 3, 4;
    b << 5, 6;
    DenseMatrix k(2, 4);
    k << 5, 6, 10, 12, 15, 18, 20, 24;
    EXPECT_EQ(kronecker(a, b), k);
    EXPECT_EQ(hadamard(a, a), a.cwiseProduct(a));
    EXPECT_THROW(hadamard(a, b), ShapeError);
}

TEST(PsdPinv, RankDeficient) {
    const DenseMatrix f = DenseMatrix::Random(5, 2);
    const DenseMatrix g = f * f.transpose();
    const auto p = psd_pinv(g);
    EXPECT_EQ(p.rank, 2);
    EXPECT_TRUE((g * p.pinv * g).isApprox(g, 1e-10));
    EXPECT_TRUE((p.pinv * g * p.pinv).isApprox(p.pinv, 1e-10));
    EXPECT_TRUE(p.pinv.isApprox(p.pinv.transpose()));
}

TEST(PsdPinv, Errors) {
    DenseMatrix g(2, 2);
    g << 1, 0, 0, -1;
    EXPECT_THROW(psd_pinv(g), NotPSDError);
    EXPECT_THROW(psd_pinv(DenseMatrix::Ones(2, 3)), ShapeError);
    const auto z = psd_pinv(DenseMatrix::Zero(3, 3));
    EXPECT_EQ(z.rank, 0);
    EXPECT_EQ(z.pinv, DenseMatrix::Zero(3, 3));
}

TEST(Tensor, FloatScalar) {
    Tensor<float> t({2, 2});
    t[3] = 1.5f;
    EXPECT_EQ(permute(t, std::vector<Index>{1, 0}).at(std::vector<Index>{1, 1}), 1.5f);
}
