#include "spinmech/random.hpp"
#include "spinmech/spinmodel.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace spinmech;

namespace {

// Independent construction of H/h and a dense eigen-solve.
EsrPair oracle_esr(double D, double g, double bz, double bx)
{
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Matrix3d H;
    H << D + g * bz, g * bx * s, 0.0,
         g * bx * s, 0.0, g * bx * s,
         0.0, g * bx * s, D - g * bz;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
    // The m=0-like state has the largest weight on the middle basis vector.
    int zero = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(es.eigenvectors()(1, i)) > std::abs(es.eigenvectors()(1, zero))) {
            zero = i;
        }
    }
    std::vector<double> f;
    for (int i = 0; i < 3; ++i) {
        if (i != zero) {
            f.push_back(std::abs(es.eigenvalues()[i] - es.eigenvalues()[zero]));
        }
    }
    std::sort(f.begin(), f.end());
    return {f[0], f[1]};
}

// Closed-form inverse from the characteristic polynomial
// E³ − 2D E² + (D² − γ²B²) E + γ² bx² D = 0 with roots E0, E0 + f−, E0 + f+.
FieldComponents oracle_invert(double D, double g, const EsrPair& e)
{
    const double e0 = (2.0 * D - e.f_minus - e.f_plus) / 3.0;
    const double e1 = e0 + e.f_minus;
    const double e2 = e0 + e.f_plus;
    const double pair_sum = e0 * e1 + e0 * e2 + e1 * e2;
    const double b2 = (D * D - pair_sum) / (g * g);
    const double bx2 = -e0 * e1 * e2 / (g * g * D);
    return {std::sqrt(std::max(0.0, b2 - bx2)), std::sqrt(std::max(0.0, bx2))};
}

}  // namespace

TEST_SUITE("spinmodel")
{
    const SpinParams P;

    TEST_CASE("zero field is degenerate at D")
    {
        const auto e = esr_frequencies(P, {0.0, 0.0});
        CHECK(e.f_minus == doctest::Approx(2.8707e9).epsilon(1e-15));
        CHECK(e.f_plus == doctest::Approx(2.8707e9).epsilon(1e-15));
    }

    TEST_CASE("axial field splits by 2 γe Bz")
    {
        const auto e = esr_frequencies(P, {0.01, 0.0});
        CHECK(std::abs(e.f_minus - 2.5907e9) < 1e-3);
        CHECK(std::abs(e.f_plus - 3.1507e9) < 1e-3);
        for (double bz : {1e-4, 3e-3, 0.02, 0.05, 0.1}) {
            const auto f = esr_frequencies(P, {bz, 0.0});
            CHECK(std::abs((f.f_plus - f.f_minus) - 2.0 * P.gamma_e * bz) < 1e-4);
        }
        // Past the ground-state crossing at D/γe the lower line folds through zero.
        const auto past = esr_frequencies(P, {0.2, 0.0});
        CHECK(std::abs((past.f_plus - past.f_minus) - 2.0 * P.zero_field_splitting) < 1e-4);
    }

    TEST_CASE("tilted field matches a dense eigensolver")
    {
        RandomStream rng(11, 0);
        for (int i = 0; i < 500; ++i) {
            const double bz = 0.08 * rng.uniform();
            const double bx = 0.02 * rng.uniform();
            const auto e = esr_frequencies(P, {bz, bx});
            const auto o = oracle_esr(P.zero_field_splitting, P.gamma_e, bz, bx);
            CHECK(std::abs(e.f_minus - o.f_minus) < 1e-4);
            CHECK(std::abs(e.f_plus - o.f_plus) < 1e-4);
        }
        const auto e = esr_frequencies(P, {0.01, 0.002});
        const auto o = oracle_esr(P.zero_field_splitting, P.gamma_e, 0.01, 0.002);
        CHECK(std::abs(e.f_minus - o.f_minus) < 1e-4);
        CHECK(std::abs(e.f_plus - o.f_plus) < 1e-4);
    }

    TEST_CASE("eigenvalue trace equals 2D")
    {
        // 1e-6 Hz is about one ulp at 5.7e9 Hz.
        RandomStream rng(12, 0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const auto s = spin_spectrum(P, {0.1 * rng.uniform(), 0.01 * rng.uniform()});
            worst = std::max(worst, std::abs(s.energies[0] + s.energies[1] + s.energies[2] - 2.0 * P.zero_field_splitting));
        }
        CHECK(worst <= 1e-6);

        // Beyond ~8.6e9 Hz one ulp exceeds 1e-6 Hz, so strong fields are held
        // to two ulp of the largest level instead.
        double worst_ulps = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const auto s = spin_spectrum(P, {0.3 * (2.0 * rng.uniform() - 1.0), 0.1 * rng.uniform()});
            const double big = std::max(std::abs(s.energies[0]), std::abs(s.energies[2]));
            const double ulp = std::nextafter(big, 2.0 * big) - big;
            const double err = std::abs(s.energies[0] + s.energies[1] + s.energies[2] - 2.0 * P.zero_field_splitting);
            worst_ulps = std::max(worst_ulps, err / ulp);
        }
        CHECK(worst_ulps <= 2.0);
    }

    TEST_CASE("frequencies are monotone in bz without transverse field")
    {
        EsrPair prev = esr_frequencies(P, {0.0, 0.0});
        for (int i = 1; i <= 100; ++i) {
            const auto e = esr_frequencies(P, {1e-3 * i, 0.0});
            CHECK(e.f_plus > prev.f_plus);
            CHECK(e.f_minus < prev.f_minus);
            prev = e;
        }
    }

    TEST_CASE("inversion of the canonical pairs")
    {
        const auto z = invert_field(P, {2.8707e9, 2.8707e9});
        CHECK(z.bz == 0.0);
        CHECK(z.bx == 0.0);
        const auto a = invert_field(P, {2.5907e9, 3.1507e9});
        CHECK(std::abs(a.bz - 0.01) < 1e-12);
        CHECK(a.bx < 1e-9);
    }

    TEST_CASE("inversion agrees with the characteristic-polynomial closed form")
    {
        RandomStream rng(13, 0);
        for (int i = 0; i < 300; ++i) {
            const double bz = 0.05 * rng.uniform();
            const double bx = 0.005 * rng.uniform();
            const auto e = esr_frequencies(P, {bz, bx});
            const auto inv = invert_field(P, e);
            const auto cf = oracle_invert(P.zero_field_splitting, P.gamma_e, e);
            CHECK(std::abs(inv.bz - cf.bz) < 1e-8);
            CHECK(std::abs(inv.bx - cf.bx) < 1e-7);
        }
    }

    TEST_CASE("forward-inverse roundtrip on the working domain")
    {
        RandomStream rng(14, 0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const FieldComponents f{0.05 * rng.uniform(), 0.005 * rng.uniform()};
            const auto back = invert_field(P, esr_frequencies(P, f));
            worst = std::max({worst, std::abs(back.bz - f.bz), std::abs(back.bx - f.bx)});
            const auto again = esr_frequencies(P, back);
            const auto orig = esr_frequencies(P, f);
            CHECK(std::abs(again.f_minus - orig.f_minus) < 1e-3);
            CHECK(std::abs(again.f_plus - orig.f_plus) < 1e-3);
        }
        CHECK(worst < 1e-7);
    }

    TEST_CASE("inversion errors")
    {
        try {
            invert_field(P, {3.0e9, 2.9e9});
            FAIL("expected OutOfRange");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::OutOfRange);
        }
        // Both lines far above D cannot come from any field.
        try {
            invert_field(P, {4.0e9, 4.0e9 + 1e6});
            FAIL("expected NoConvergence");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NoConvergence);
        }
    }
}
