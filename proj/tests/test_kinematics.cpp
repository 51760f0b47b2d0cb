#include <doctest.h>

#include "vinesim/error.hpp"
#include "vinesim/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace vinesim;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

// Bend angle read off the rotated growth axis, independent of the closed form.
double bend_angle_by_rotation(const Quaternion& q)
{
    const Eigen::Quaterniond e(q.w, q.x, q.y, q.z);
    const Vec3 z = e.normalized() * Vec3::UnitZ();
    return std::atan2(z.head<2>().norm(), z.z());
}

}  // namespace

TEST_CASE("quat_to_arc: straight joystick")
{
    const auto arc = quat_to_arc({1, 0, 0, 0}, 0.3);
    CHECK(arc.kappa == 0.0);
    CHECK(arc.phi == 0.0);
    CHECK(arc.s == 0.3);
}

TEST_CASE("quat_to_arc: quarter bends")
{
    // Rotation about +x by 90 degrees: numerator q_x q_w = 0.5, denominator 0.
    const auto ax = quat_to_arc({0.70711, 0.70711, 0, 0}, 0.3);
    CHECK(ax.kappa == Approx(5.23599).epsilon(1e-5));
    CHECK(ax.phi == Approx(kPi / 2).epsilon(1e-9));

    // Rotation about +y: numerator 0, denominator -0.5 -> pi, wrapped to -pi.
    const auto ay = quat_to_arc({0.70711, 0, 0.70711, 0}, 0.3);
    CHECK(ay.kappa == Approx(5.23599).epsilon(1e-5));
    CHECK(ay.phi == Approx(-kPi).epsilon(1e-9));
}

TEST_CASE("quat_to_arc: bend agrees with the rotated growth axis")
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        Quaternion q{n(rng), n(rng), n(rng), n(rng)};
        const double s = 0.1 + std::abs(n(rng));
        const auto arc = quat_to_arc(q, s);
        CHECK(arc.kappa * s == Approx(bend_angle_by_rotation(q)).epsilon(1e-9));
        CHECK(arc.phi >= -kPi);
        CHECK(arc.phi < kPi);
    }
}

TEST_CASE("quat_to_arc: kappa depends only on q_x^2 + q_y^2")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Quaternion q = Quaternion{u(rng), u(rng), u(rng), u(rng)}.normalized();
        // Rotating (q_x, q_y) and swapping (q_w, q_z) mass keeps q_x^2 + q_y^2.
        const double a = u(rng) * kPi;
        const Quaternion r{q.z, q.x * std::cos(a) - q.y * std::sin(a), q.x * std::sin(a) + q.y * std::cos(a), q.w};
        CHECK(quat_to_arc(q, 0.5).kappa == Approx(quat_to_arc(r, 0.5).kappa).epsilon(1e-12));
    }
}

TEST_CASE("quat_to_arc: rejects non-finite input")
{
    CHECK_THROWS_AS(quat_to_arc({NAN, 0, 0, 0}, 0.3), InvalidInput);
    CHECK_THROWS_AS(quat_to_arc({1, INFINITY, 0, 0}, 0.3), InvalidInput);
    CHECK_THROWS_AS(quat_to_arc({0, 0, 0, 0}, 0.3), InvalidInput);
    CHECK_THROWS_AS(quat_to_arc({1, 0, 0, 0}, 0.0), InvalidInput);
}

TEST_CASE("bend_to_quat inverts quat_to_arc")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> bend(1e-3, kPi - 1e-3);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 500; ++i) {
        const double s = 0.3;
        const double kappa = bend(rng) / s;
        const double phi = ang(rng);
        const auto q = bend_to_quat(kappa, phi, s);
        CHECK(q.norm() == Approx(1.0).epsilon(1e-12));
        const auto arc = quat_to_arc(q, s);
        CHECK(arc.kappa == Approx(kappa).epsilon(1e-9));
        CHECK(std::abs(wrap_angle(arc.phi - phi)) < 1e-9);
    }
}

TEST_CASE("arc_to_tip examples")
{
    const auto straight = arc_to_tip({0.0, 1.234, 1.0});
    CHECK(straight.x == 0.0);
    CHECK(straight.y == 0.0);

    const auto t0 = arc_to_tip({kPi / 2, 0.0, 1.0});
    CHECK(t0.x == Approx(0.63662).epsilon(1e-5));
    CHECK(t0.y == Approx(0.0));

    const auto t1 = arc_to_tip({kPi / 2, kPi / 2, 1.0});
    CHECK(t1.x == Approx(0.0).epsilon(1e-12));
    CHECK(t1.y == Approx(-0.63662).epsilon(1e-5));
}

TEST_CASE("arc_to_tip matches the literal formula and stays within s")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> bend(1e-4, kPi - 1e-4);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> len(0.05, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double s = len(rng);
        const ArcParams a{bend(rng) / s, ang(rng), s};
        const auto t = arc_to_tip(a);
        const double lit_x = -std::cos(a.phi) * (std::cos(a.kappa * s) - 1.0) / a.kappa;
        const double lit_y = std::sin(a.phi) * (std::cos(a.kappa * s) - 1.0) / a.kappa;
        CHECK(t.x == Approx(lit_x).epsilon(1e-9));
        CHECK(t.y == Approx(lit_y).epsilon(1e-9));
        CHECK(t.norm() <= s);
    }
}

TEST_CASE("lateral reach is monotone up to the fold and folds back after it")
{
    const double s = 1.0;
    double prev = 0.0;
    for (int i = 1; i <= 2000; ++i) {
        const double kappa = kMaxInvertibleBend / s * i / 2000.0;
        const double r = arc_to_tip({kappa, 0.0, s}).norm();
        CHECK(r > prev);
        prev = r;
    }
    CHECK(prev == Approx(max_lateral_reach(s)).epsilon(1e-12));
    // kappa*s = pi/2 and kappa*s = pi give the same lateral magnitude 2/pi.
    CHECK(arc_to_tip({kPi, 0.0, 1.0}).norm() == Approx(arc_to_tip({kPi / 2, 0.0, 1.0}).norm()).epsilon(1e-12));
    CHECK(std::tan(kMaxInvertibleBend / 2) == Approx(kMaxInvertibleBend).epsilon(1e-14));
}

TEST_CASE("tip_to_arc examples")
{
    const auto z = tip_to_arc({0.0, 0.0}, 1.0);
    CHECK(z.kappa == 0.0);
    CHECK(z.phi == 0.0);

    const auto a = tip_to_arc({0.63662, 0.0}, 1.0);
    CHECK(a.kappa == Approx(kPi / 2).epsilon(1e-5));
    CHECK(a.phi == Approx(0.0));

    CHECK_THROWS_AS(tip_to_arc({0.8, 0.0}, 1.0), OutOfWorkspace);
    CHECK_THROWS_AS(tip_to_arc({0.1, 0.0}, -1.0), InvalidInput);
}

TEST_CASE("tip_to_arc round trip on the principal branch")
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> bend(1e-6, kMaxInvertibleBend - 1e-3);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> len(0.1, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double s = len(rng);
        const ArcParams a{bend(rng) / s, ang(rng), s};
        const auto tip = arc_to_tip(a);
        const auto back = tip_to_arc(tip, s);
        const auto again = arc_to_tip(back);
        CHECK(std::hypot(again.x - tip.x, again.y - tip.y) < 1e-9);
        CHECK(std::abs(back.kappa - a.kappa) < 1e-8);
        CHECK(std::abs(wrap_angle(back.phi - a.phi)) < 1e-8);
    }
}

TEST_CASE("arc_backbone_points: straight arc")
{
    const auto pts = arc_backbone_points(Pose3::identity(), {0.0, 0.0, 1.0}, 3);
    REQUIRE(pts.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(pts[i].position.x() == 0.0);
        CHECK(pts[i].position.y() == 0.0);
        CHECK(pts[i].position.z() == Approx(0.5 * i));
    }
    CHECK_THROWS_AS(arc_backbone_points(Pose3::identity(), {0.0, 0.0, 1.0}, 1), InvalidInput);
}

TEST_CASE("arc_backbone_points: endpoint is arc_to_tip lifted to 3D")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> bend(1e-4, kPi - 1e-4);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const ArcParams a{bend(rng), ang(rng), 1.0};
        const auto pts = arc_backbone_points(Pose3::identity(), a, 2);
        const auto tip = arc_to_tip(a);
        const Vec3 lifted(tip.x, tip.y, std::sin(a.kappa * a.s) / a.kappa);
        CHECK((pts.back().position - lifted).norm() < 1e-9);
    }
    const ArcParams quarter{kPi / 2, 0.0, 1.0};
    const auto pts = arc_backbone_points(Pose3::identity(), quarter, 2);
    CHECK((pts.back().position - Vec3(2 / kPi, 0.0, 2 / kPi)).norm() < 1e-9);
}

TEST_CASE("arc_backbone_points: spacing and total length")
{
    const ArcParams a{kPi / 2, 0.7, 1.0};
    const auto pts = arc_backbone_points(Pose3::identity(), a, 1000);
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i].position - pts[i - 1].position).norm();
    CHECK(std::abs(len - 1.0) < 1e-6);

    // Arc-length spacing: each tangent advances by the same angle.
    const double step = a.s / 999.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double ang = pts[i - 1].tangent().dot(pts[i].tangent());
        CHECK(std::acos(std::min(1.0, ang)) == Approx(a.kappa * step).epsilon(1e-6));
    }
}

TEST_CASE("arc_backbone_points respects a non-trivial base pose")
{
    Pose3 base;
    base.position = Vec3(1.0, 2.0, 3.0);
    base.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Vec3(1, 1, 0).normalized()));
    const ArcParams a{1.2, -0.3, 0.8};
    const auto pts = arc_backbone_points(base, a, 5);
    CHECK((pts.front().position - base.position).norm() == 0.0);
    const auto local = arc_backbone_points(Pose3::identity(), a, 5);
    CHECK((pts.back().position - (base.position + base.orientation * local.back().position)).norm() < 1e-12);
    CHECK(std::abs(pts.back().orientation.norm() - 1.0) < 1e-6);
}

TEST_CASE("arc_through_point recovers a known arc")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> bend(1e-3, kPi - 1e-2);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const ArcParams a{bend(rng) / 0.9, ang(rng), 0.9};
        const Vec3 end = arc_pose_at(Pose3::identity(), a, a.s).position;
        ArcParams got;
        REQUIRE(arc_through_point(Pose3::identity(), end, got));
        CHECK(got.kappa == Approx(a.kappa).epsilon(1e-9));
        CHECK(got.s == Approx(a.s).epsilon(1e-9));
        CHECK(std::abs(wrap_angle(got.phi - a.phi)) < 1e-9);
    }
    ArcParams out;
    CHECK_FALSE(arc_through_point(Pose3::identity(), Vec3(0.1, 0, -0.1), out));
}
