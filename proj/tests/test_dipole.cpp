#include "spinmech/dipole.hpp"
#include "spinmech/random.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <cmath>

using namespace spinmech;

namespace {

// Scalar potential ψ = (μ0/4π)(m·r)/r³, B = −∇ψ.
double potential(const Dipole& d, const Vec3& p)
{
    const Vec3 r = p - d.position;
    return 1e-7 * d.moment.dot(r) / std::pow(r.norm(), 3);
}

Vec3 field_from_potential(const Dipole& d, const Vec3& p)
{
    const double h = 1e-4 * (p - d.position).norm();
    Vec3 b;
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = h;
        b[k] = -(potential(d, p + e) - potential(d, p - e)) / (2.0 * h);
    }
    return b;
}

Vec3 random_unit(RandomStream& rng)
{
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    return v.normalized();
}

GridGeometry scan_grid(std::size_t n, double pitch)
{
    const double half = 0.5 * pitch * static_cast<double>(n - 1);
    return {n, n, -half, -half, pitch, pitch};
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace

TEST_SUITE("dipole")
{
    const Dipole onaxis{{0.0, 0.0, 1e-14}, Vec3::Zero()};

    TEST_CASE("closed-form on-axis and equatorial values")
    {
        const Vec3 b = dipole_field(onaxis, {0.0, 0.0, 1e-6});
        CHECK(b.z() == doctest::Approx(2e-3).epsilon(1e-14));
        CHECK(std::abs(b.x()) < 1e-18);
        const Vec3 q = dipole_field(onaxis, {1e-6, 0.0, 0.0});
        CHECK(q.z() == doctest::Approx(-1e-3).epsilon(1e-14));
        // ∂z of 2k m/z³.
        const double g = axial_gradient(onaxis, {0.0, 0.0, 1e-6}, NvAxis({0, 0, 1}), {0, 0, 1});
        CHECK(g == doctest::Approx(-6e3).epsilon(1e-12));
        const double g2 = axial_gradient(onaxis, {0.0, 0.0, 2e-6}, NvAxis({0, 0, 1}), {0, 0, 1});
        CHECK(std::abs(g / g2 - 16.0) < 16.0 * 1e-9);
    }

    TEST_CASE("field is minus the gradient of the scalar potential")
    {
        RandomStream rng(21, 0);
        for (int i = 0; i < 200; ++i) {
            const Dipole d{random_unit(rng) * 1e-14, Vec3(rng.normal(), rng.normal(), rng.normal()) * 1e-6};
            const Vec3 p = d.position + random_unit(rng) * (0.5e-6 + 2e-6 * rng.uniform());
            const Vec3 b = dipole_field(d, p);
            const Vec3 o = field_from_potential(d, p);
            CHECK((b - o).norm() < 1e-6 * b.norm());
        }
    }

    TEST_CASE("divergence vanishes and the field is linear in the moment")
    {
        RandomStream rng(22, 0);
        for (int i = 0; i < 100; ++i) {
            const Dipole d{random_unit(rng) * 1e-14, Vec3::Zero()};
            const Vec3 p = random_unit(rng) * (1e-6 + 1e-6 * rng.uniform());
            const double r = p.norm();
            const double h = 1e-5 * r;
            double div = 0.0;
            for (int k = 0; k < 3; ++k) {
                Vec3 e = Vec3::Zero();
                e[k] = h;
                div += (dipole_field(d, p + e)[k] - dipole_field(d, p - e)[k]) / (2.0 * h);
            }
            const Vec3 b = dipole_field(d, p);
            CHECK(std::abs(div) < 1e-6 * b.norm() / r);
            const Dipole d2{2.0 * d.moment, d.position};
            CHECK(dipole_field(d2, p) == 2.0 * b);
        }
    }

    TEST_CASE("axial projection cases")
    {
        const Vec3 p(0.3e-6, -0.4e-6, 0.8e-6);
        const Vec3 b = dipole_field(onaxis, p);
        CHECK(axial_field(onaxis, p, NvAxis(b)) == doctest::Approx(b.norm()).epsilon(1e-14));
        const Vec3 perp = b.cross(Vec3(1, 0, 0));
        CHECK(std::abs(axial_field(onaxis, p, NvAxis(perp))) < 1e-15 * b.norm());
        RandomStream rng(23, 0);
        for (int i = 0; i < 50; ++i) {
            const Vec3 n = random_unit(rng);
            CHECK(axial_field(onaxis, p, NvAxis(n)) ==
                  doctest::Approx(n.x() * b.x() + n.y() * b.y() + n.z() * b.z()).epsilon(1e-13));
        }
    }

    TEST_CASE("analytic gradients match finite differences")
    {
        RandomStream rng(24, 0);
        for (int i = 0; i < 100; ++i) {
            const Dipole d{random_unit(rng) * 1e-14, Vec3(rng.normal(), rng.normal(), -1.0) * 1e-6};
            const Vec3 p(rng.normal() * 1e-6, rng.normal() * 1e-6, 0.0);
            const NvAxis nv(random_unit(rng));
            const Vec3 u = random_unit(rng);
            const double h = 1e-10;
            const double fd = (axial_field(d, p + h * u, nv) - axial_field(d, p - h * u, nv)) / (2.0 * h);
            const double an = axial_gradient(d, p, nv, u);
            const double scale = dipole_field_jacobian(d, p).norm();
            CHECK(std::abs(fd - an) < 1e-5 * scale);

            // Parameter Jacobian used by the fitter.
            const auto g = axial_field_parameter_gradient(d, p, nv);
            for (int k = 0; k < 6; ++k) {
                Dipole dp = d, dm = d;
                const double step = k < 3 ? 1e-6 * d.moment.norm() : 1e-6 * (p - d.position).norm();
                if (k < 3) {
                    dp.moment[k] += step;
                    dm.moment[k] -= step;
                } else {
                    dp.position[k - 3] += step;
                    dm.position[k - 3] -= step;
                }
                const double fdk = (axial_field(dp, p, nv) - axial_field(dm, p, nv)) / (2.0 * step);
                const double col_scale = k < 3 ? std::abs(axial_field(d, p, nv)) / d.moment.norm()
                                               : dipole_field_jacobian(d, p).norm();
                CHECK(std::abs(fdk - g[k]) < 1e-5 * std::max(std::abs(g[k]), col_scale));
            }
        }
    }

    TEST_CASE("singular point is reported")
    {
        try {
            dipole_field(onaxis, Vec3::Zero());
            FAIL("expected SingularPoint");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SingularPoint);
        }
    }

    TEST_CASE("noiseless fit from a perturbed start recovers planted parameters")
    {
        const Dipole planted{{2e-15, -1e-15, 1e-14}, {0.1e-6, -0.2e-6, 0.0}};
        const NvAxis nv(Vec3(0.3, 0.1, 1.0));
        const double z = 1e-6;
        const auto map = synthesize_axial_map(planted, scan_grid(21, 0.25e-6), z, nv);
        Dipole init = planted;
        init.moment *= 1.1;
        init.moment.x() *= 0.9;
        init.position += Vec3(0.1e-6, 0.1e-6, -0.1e-6);
        const auto fit = fit_dipole(map, nv, z, init);
        CHECK(fit.report.converged);
        CHECK((fit.dipole.moment - planted.moment).norm() < 1e-6 * planted.moment.norm());
        CHECK((fit.dipole.position - planted.position).norm() < 1e-6 * 1e-6);
        CHECK(fit.report.max_residual >= fit.report.rms_residual);

        // Refit from the optimum barely moves.
        const auto again = fit_dipole(map, nv, z, fit.dipole);
        CHECK((again.dipole.moment - fit.dipole.moment).norm() <= 1e-10 * fit.dipole.moment.norm());
        CHECK((again.dipole.position - fit.dipole.position).norm() <= 1e-10 * fit.dipole.position.norm());

        // Without an initial guess the grid-search seed must land in the basin.
        const auto seeded = fit_dipole(map, nv, z);
        CHECK((seeded.dipole.moment - planted.moment).norm() < 1e-6 * planted.moment.norm());
    }

    TEST_CASE("invalid pixels are ignored by the fit")
    {
        const Dipole planted{{0.0, 3e-15, 1e-14}, {0.0, 0.0, 0.0}};
        const NvAxis nv(Vec3(0, 0, 1));
        auto map = synthesize_axial_map(planted, scan_grid(15, 0.3e-6), 1e-6, nv);
        for (std::size_t i = 0; i < map.size(); i += 7) {
            map.values[i] = 1.0;  // garbage
            map.valid[i] = 0;
        }
        const auto fit = fit_dipole(map, nv, 1e-6);
        CHECK((fit.dipole.moment - planted.moment).norm() < 1e-6 * planted.moment.norm());
    }

    TEST_CASE("degenerate and underdetermined maps")
    {
        FieldMap flat(scan_grid(6, 0.2e-6), 1e-3);
        try {
            fit_dipole(flat, NvAxis({0, 0, 1}), 1e-6);
            FAIL("expected DegenerateMap");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateMap);
        }
        FieldMap few(scan_grid(2, 0.2e-6), 0.0);
        try {
            fit_dipole(few, NvAxis({0, 0, 1}), 1e-6);
            FAIL("expected Underdetermined");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Underdetermined);
        }
    }

    TEST_CASE("gradient map scale, far-field scaling and symmetry")
    {
        const NvAxis nv(Vec3(0, 0, 1));
        // 20 G on axis at 1 µm.
        const Dipole d{{0.0, 0.0, 1e-14}, Vec3::Zero()};
        CHECK(axial_field(d, {0, 0, 1e-6}, nv) == doctest::Approx(20.0 * constants::gauss).epsilon(1e-12));
        const auto near = gradient_map(d, scan_grid(21, 0.1e-6), 1e-6, nv, {1, 0, 0}, 4);
        CHECK(near.max_abs_gradient > 1e3);
        CHECK(near.max_abs_gradient < 1e5);

        // Everything 10× farther: 1e4 reduction.
        const auto g1 = gradient_map(d, scan_grid(5, 0.2e-6), 1e-6, nv, {0, 0, 1});
        const auto g10 = gradient_map(d, scan_grid(5, 2e-6), 1e-5, nv, {0, 0, 1});
        CHECK(rel(g1.max_abs_gradient / g10.max_abs_gradient, 1e4) < 1e-9);

        // x-gradient on the symmetry line x = 0 of a z-dipole vanishes.
        const auto sym = gradient_map(d, scan_grid(11, 0.2e-6), 1e-6, nv, {1, 0, 0});
        const auto& g = sym.map.geometry;
        for (std::size_t iy = 0; iy < g.ny; ++iy) {
            CHECK(std::abs(sym.map.values[g.index(5, iy)]) < 1e-9 * near.max_abs_gradient);
        }

        // Thread count does not change the map.
        const auto one = gradient_map(d, scan_grid(21, 0.1e-6), 1e-6, nv, {1, 0, 0}, 1);
        CHECK(one.map.values == near.map.values);
    }

    TEST_CASE("dipole JSON roundtrip")
    {
        const Dipole d{{1.5e-14, -2e-15, 3e-16}, {1e-7, 2e-7, -3e-7}};
        const Dipole back = dipole_from_json(dipole_to_json(d));
        CHECK(back.moment == d.moment);
        CHECK(back.position == d.position);
        CHECK_THROWS_AS(dipole_from_json("{\"moment_am2\":[1,2]}"), Error);
        CHECK_THROWS_AS(dipole_from_json("not json"), Error);
    }
}
