#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "aerotele/coupling.hpp"

using namespace aerotele;

namespace {

HandleState random_handle(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    HandleState h;
    h.position = {u(rng), u(rng), u(rng)};
    h.attitude = so3::exp(Vec3(u(rng), u(rng), u(rng)));
    return h;
}

}  // namespace

TEST(ReferenceRates, IdleHandleCommandsNothing) {
    const auto r = handle_to_reference_rates(HandleState{}, CouplingParams{});
    EXPECT_EQ(r.linear, Vec3::Zero());
    EXPECT_EQ(r.angular, Vec3::Zero());
}

TEST(ReferenceRates, FullDeflectionGivesMaxVelocity) {
    HandleState h;
    h.position = {1, 0, 0};
    CouplingParams p;
    EXPECT_EQ(p.max_velocity, 0.15);
    EXPECT_EQ(handle_to_reference_rates(h, p).linear, Vec3(0.15, 0, 0));
    for (const Vec3 corner : {Vec3(1, 1, 1), Vec3(-1, 1, -1)}) {
        h.position = corner;
        EXPECT_LE(handle_to_reference_rates(h, p).linear.cwiseAbs().maxCoeff(), 0.15);
    }
}

TEST(ReferenceRates, YawRateClosedForm) {
    CouplingParams p;
    HandleState h;
    for (double theta : {-0.7, 0.1, 0.5}) {
        h.attitude = so3::axis_angle(Vec3::UnitZ(), theta);
        const auto r = handle_to_reference_rates(h, p);
        EXPECT_LT((r.angular - Vec3(0, 0, p.max_angular_rate * std::sin(theta))).norm(), 1e-15);
    }
}

TEST(ReferenceRates, LinearInHandlePosition) {
    std::mt19937_64 rng(3);
    CouplingParams p;
    for (int i = 0; i < 100; ++i) {
        HandleState h = random_handle(rng);
        h.position *= 0.5;
        HandleState h2 = h;
        h2.position *= 2.0;
        EXPECT_LT((handle_to_reference_rates(h2, p).linear - 2.0 * handle_to_reference_rates(h, p).linear).norm(),
                  1e-15);
    }
}

TEST(ReferenceRates, AngularMaskKeepsYawOnly) {
    CouplingParams p;
    p.angular_mask = {0, 0, 1};
    HandleState h;
    h.attitude = so3::exp(Vec3(0.3, -0.2, 0.4));
    const auto r = handle_to_reference_rates(h, p);
    EXPECT_EQ(r.angular.x(), 0.0);
    EXPECT_EQ(r.angular.y(), 0.0);
    EXPECT_NE(r.angular.z(), 0.0);
}

TEST(IntegrateReference, ZeroRatesLeaveReferenceUnchanged) {
    ReferenceState ref;
    ref.position = {1, 2, 3};
    const auto next = integrate_reference(ref, {}, 0.002);
    EXPECT_EQ(next.position, ref.position);
    EXPECT_EQ(next.attitude, ref.attitude);
}

TEST(IntegrateReference, ConstantVelocityExactIntegral) {
    ReferenceState ref;
    const ReferenceRates rates{Vec3(0.15, 0, 0), Vec3::Zero()};
    ref = integrate_reference(ref, rates, 0.002);  // rates switch on during the first step
    const Vec3 start = ref.position;
    for (int i = 0; i < 5000; ++i) ref = integrate_reference(ref, rates, 0.002);
    EXPECT_LT((ref.position - start - Vec3(1.5, 0, 0)).norm(), 1e-9);
}

TEST(IntegrateReference, ConstantYawRateHalfTurn) {
    ReferenceState ref;
    ref.angular_velocity = {0, 0, 0.1};
    const ReferenceRates rates{Vec3::Zero(), Vec3(0, 0, 0.1)};
    const double total = std::numbers::pi / 0.1;
    const int steps = 15708;
    const double dt = total / steps;
    for (int i = 0; i < steps; ++i) ref = integrate_reference(ref, rates, dt);
    Mat3 expected;
    expected << -1, 0, 0, 0, -1, 0, 0, 0, 1;
    EXPECT_LT((ref.attitude - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Recentering, IdleHandleHasNoWrench) {
    const auto w = recentering_wrench(HandleState{}, CouplingParams{});
    EXPECT_EQ(w.stacked(), Vector6::Zero());
}

TEST(Recentering, SpringForce) {
    HandleState h;
    h.position = {0.5, 0, 0};
    EXPECT_EQ(recentering_wrench(h, CouplingParams{}).force, Vec3(-5, 0, 0));
}

TEST(Recentering, OddInHandlePose) {
    std::mt19937_64 rng(8);
    CouplingParams p;
    for (int i = 0; i < 100; ++i) {
        const HandleState h = random_handle(rng);
        HandleState mirrored = h;
        mirrored.position = -h.position;
        mirrored.attitude = h.attitude.transpose();
        EXPECT_LT((recentering_wrench(mirrored, p).stacked() + recentering_wrench(h, p).stacked()).norm(), 1e-14);
    }
}

TEST(Feedback, IdleWithoutContactIsZero) {
    EXPECT_EQ(feedback_wrench(Wrench6{}, HandleState{}, CouplingParams{}).stacked(), Vector6::Zero());
}

TEST(Feedback, ScaledToOneThird) {
    CouplingParams p;
    EXPECT_DOUBLE_EQ(p.force_scale, 1.0 / 3.0);
    const auto w = feedback_wrench({Vec3(5.2, 0, 0), Vec3::Zero()}, HandleState{}, p);
    EXPECT_NEAR(w.force.x(), 1.733, 5e-4);
    EXPECT_DOUBLE_EQ(w.force.x(), 5.2 / 3.0);
}

TEST(Feedback, SaturatesAtDeviceLimit) {
    CouplingParams p;
    EXPECT_EQ(p.force_limit, 12.0);
    const auto w = feedback_wrench({Vec3(100, -100, 30), Vec3::Zero()}, HandleState{}, p);
    EXPECT_EQ(w.force.x(), 12.0);
    EXPECT_EQ(w.force.y(), -12.0);
    EXPECT_EQ(w.force.z(), 10.0);
}

TEST(Feedback, ForceNeverExceedsLimit) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> big(0.0, 200.0);
    CouplingParams p;
    for (int i = 0; i < 1000; ++i) {
        const Wrench6 ext{Vec3(big(rng), big(rng), big(rng)), Vec3(big(rng), big(rng), big(rng))};
        EXPECT_LE(feedback_wrench(ext, random_handle(rng), p).force.cwiseAbs().maxCoeff(), p.force_limit);
    }
}

TEST(Feedback, WithoutExternalWrenchReducesToRecentering) {
    std::mt19937_64 rng(4);
    CouplingParams p;
    for (int i = 0; i < 100; ++i) {
        const HandleState h = random_handle(rng);
        EXPECT_EQ(feedback_wrench(Wrench6{}, h, p).stacked(), recentering_wrench(h, p).stacked());
    }
}

TEST(CouplingParams, Validation) {
    CouplingParams p;
    EXPECT_NO_THROW(p.validate());
    p.force_scale = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.max_velocity = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}
