#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "aerotele/so3.hpp"

using namespace aerotele;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    return {n(rng), n(rng), n(rng)};
}

// Closed-form rotation about a coordinate axis, independent of so3::exp.
Mat3 rot_z(double a) {
    Mat3 r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return r;
}

Mat3 rot_x(double a) {
    Mat3 r;
    r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return r;
}

}  // namespace

TEST(Hat, ZeroVectorGivesZeroMatrix) { EXPECT_EQ(so3::hat(Vec3::Zero()), Mat3::Zero()); }

TEST(Hat, CanonicalBasis) {
    Mat3 expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    EXPECT_EQ(so3::hat(Vec3::UnitZ()), expected);
}

TEST(Hat, MatchesCrossProduct) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Vec3 v = random_vec(rng), w = random_vec(rng);
        const Mat3 s = so3::hat(v);
        EXPECT_LT((s * w - v.cross(w)).norm(), 1e-14);
        EXPECT_EQ(s.transpose(), -s);
    }
}

TEST(Vee, ZeroAndInversePair) {
    EXPECT_EQ(so3::vee(Mat3::Zero()), Vec3::Zero());
    EXPECT_EQ(so3::vee(so3::hat(Vec3(1, 2, 3))), Vec3(1, 2, 3));
}

TEST(Vee, RoundTripOnRandomSkew) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const Mat3 a = Mat3::NullaryExpr([&] { return std::normal_distribution<double>()(rng); });
        const Mat3 s = a - a.transpose();
        EXPECT_LT((so3::hat(so3::vee(s)) - s).norm(), 1e-12);
        const Vec3 v = random_vec(rng, 100.0);
        EXPECT_EQ(so3::vee(so3::hat(v)), v);
    }
}

TEST(Vee, RejectsNonSkew) {
    Mat3 m = Mat3::Zero();
    m(0, 1) = 1.0;
    EXPECT_THROW(so3::vee(m), NotSkew);
    EXPECT_THROW(so3::vee(Mat3::Identity()), NotSkew);
}

TEST(SkewPartVee, ClosedForms) {
    EXPECT_EQ(so3::skew_part_vee(Mat3::Identity()), Vec3::Zero());
    EXPECT_LT((so3::skew_part_vee(rot_z(std::numbers::pi / 2)) - Vec3(0, 0, 1)).norm(), 1e-15);
    EXPECT_LT((so3::skew_part_vee(rot_x(0.3)) - Vec3(std::sin(0.3), 0, 0)).norm(), 1e-15);
}

TEST(SkewPartVee, AntisymmetricUnderTranspose) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Mat3 r = so3::exp(random_vec(rng));
        EXPECT_LT((so3::skew_part_vee(r.transpose()) + so3::skew_part_vee(r)).norm(), 1e-15);
    }
}

TEST(Exp, MatchesClosedFormAxisRotation) {
    for (double a : {-2.0, -0.3, 1e-9, 0.5, 3.0}) {
        EXPECT_LT((so3::exp(Vec3(0, 0, a)) - rot_z(a)).norm(), 1e-14);
        EXPECT_LT((so3::exp(Vec3(a, 0, 0)) - rot_x(a)).norm(), 1e-14);
    }
}

TEST(IntegrateRotation, ZeroRateIsIdentity) {
    EXPECT_EQ(so3::integrate_rotation(Mat3::Identity(), Vec3::Zero(), 0.01), Mat3::Identity());
}

TEST(IntegrateRotation, QuarterTurnInThousandSteps) {
    Rot3 r = Rot3::Identity();
    for (int i = 0; i < 1000; ++i) r = so3::integrate_rotation(r, Vec3(0, 0, std::numbers::pi / 2), 1e-3);
    EXPECT_LT((r - rot_z(std::numbers::pi / 2)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(IntegrateRotation, LongRandomRunStaysOnSO3) {
    std::mt19937_64 rng(2024);
    so3::AttitudeIntegrator integrator;
    Rot3 r = Rot3::Identity();
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        r = integrator.step(r, random_vec(rng, 2.0), 2e-3);
        if (integrator.steps() % so3::kRenormalizeEvery == 0) worst = std::max(worst, so3::orthonormality_error(r));
    }
    EXPECT_LT(worst, 1e-9);
    EXPECT_LT(so3::orthonormality_error(r), 1e-9);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
}

TEST(Orthonormalize, IdempotentOnRotations) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        const Mat3 r = so3::exp(random_vec(rng));
        EXPECT_LT((so3::orthonormalize(r) - r).norm(), 1e-12);
    }
}

TEST(Orthonormalize, SmallPerturbationMatchesPolarFactor) {
    std::mt19937_64 rng(9);
    const Mat3 r = so3::exp(random_vec(rng));
    const Mat3 noisy = r + 1e-4 * Mat3::NullaryExpr([&] { return std::normal_distribution<double>()(rng); });
    const Mat3 p = so3::orthonormalize(noisy);
    EXPECT_LT(so3::orthonormality_error(p), 1e-12);
    EXPECT_NEAR(p.determinant(), 1.0, 1e-12);
    // Polar oracle: the orthogonal factor Q of M = Q S has S = Q^T M symmetric.
    const Mat3 s = p.transpose() * noisy;
    EXPECT_LT((s - s.transpose()).norm(), 1e-12);
    EXPECT_LT((p - noisy).norm(), 1e-3);
}

TEST(Orthonormalize, ScaledIdentityProjectsToIdentity) {
    EXPECT_LT((so3::orthonormalize(2.0 * Mat3::Identity()) - Mat3::Identity()).norm(), 1e-15);
}

TEST(Orthonormalize, RankDeficientIsDegenerate) {
    Mat3 m = Mat3::Identity();
    m(2, 2) = 0.0;
    EXPECT_THROW(so3::orthonormalize(m), Degenerate);
}
