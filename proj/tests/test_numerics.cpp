#include "spinmech/bessel.hpp"
#include "spinmech/common.hpp"
#include "spinmech/csv.hpp"
#include "spinmech/least_squares.hpp"
#include "spinmech/parallel.hpp"
#include "spinmech/random.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace spinmech;

TEST_SUITE("numerics")
{
    TEST_CASE("J0 matches the standard library across all three regimes")
    {
        double worst = 0.0;
        for (double x = 0.0; x <= 80.0; x += 0.01) {
            worst = std::max(worst, std::abs(bessel_j0(x) - std::cyl_bessel_j(0.0, x)));
        }
        CHECK(worst < 1e-12);
        CHECK(bessel_j0(0.0) == 1.0);
        CHECK(bessel_j0(-3.7) == bessel_j0(3.7));
        // Branch boundaries.
        for (double x : {7.999999, 8.0, 8.000001, 24.999999, 25.0, 25.000001}) {
            CHECK(std::abs(bessel_j0(x) - std::cyl_bessel_j(0.0, x)) < 1e-12);
        }
    }

    TEST_CASE("LM recovers an exponential decay and reports a sane covariance")
    {
        std::vector<double> t, y;
        for (int i = 0; i < 30; ++i) {
            t.push_back(0.1 * i);
            y.push_back(2.5 * std::exp(-1.3 * t.back()));
        }
        auto fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
            r.resize(30);
            if (J) {
                J->resize(30, 2);
            }
            for (int i = 0; i < 30; ++i) {
                const double e = std::exp(-p[1] * t[i]);
                r[i] = p[0] * e - y[i];
                if (J) {
                    (*J)(i, 0) = e;
                    (*J)(i, 1) = -p[0] * t[i] * e;
                }
            }
        };
        Eigen::VectorXd p0(2);
        p0 << 1.0, 0.5;
        const auto res = levenberg_marquardt(fn, p0);
        CHECK(res.converged);
        CHECK(res.params[0] == doctest::Approx(2.5).epsilon(1e-10));
        CHECK(res.params[1] == doctest::Approx(1.3).epsilon(1e-10));
        CHECK_FALSE(res.rank_deficient);
    }

    TEST_CASE("LM flags a rank-deficient Jacobian")
    {
        // r = (a + b) − 1 on three points: only a + b is identifiable.
        auto fn = [](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
            r = Eigen::VectorXd::Constant(3, p[0] + p[1] - 1.0);
            if (J) {
                *J = Eigen::MatrixXd::Ones(3, 2);
            }
        };
        Eigen::VectorXd p0(2);
        p0 << 3.0, 4.0;
        const auto res = levenberg_marquardt(fn, p0);
        CHECK(res.rank_deficient);
        CHECK(std::abs(res.params[0] + res.params[1] - 1.0) < 1e-10);
    }

    TEST_CASE("LM projection keeps a bound")
    {
        // Minimum of (p − (−1))² is at −1; projected to p ≥ 0 it must stop at 0.
        auto fn = [](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
            r.resize(1);
            r[0] = p[0] + 1.0;
            if (J) {
                *J = Eigen::MatrixXd::Ones(1, 1);
            }
        };
        Eigen::VectorXd p0(1);
        p0 << 2.0;
        const auto res = levenberg_marquardt(fn, p0, {}, [](Eigen::VectorXd& p) { p[0] = std::max(p[0], 0.0); });
        CHECK(res.params[0] == 0.0);
    }

    TEST_CASE("CSV reader skips comments, validates fields and reports line numbers")
    {
        std::istringstream in("# comment\n\nx,y\n1,2\n# more\n3.5,-4e-3\n");
        const auto t = csv::read(in);
        REQUIRE(t.rows.size() == 2);
        CHECK(t.numbers("y")[1] == -4e-3);
        CHECK(t.line_numbers[1] == 6);
        CHECK_FALSE(t.has_column("z"));
        CHECK_THROWS_AS(t.column("z"), Error);

        std::istringstream bad("x,y\n1,abc\n");
        const auto tb = csv::read(bad);
        try {
            (void)tb.numbers("y");
            FAIL("expected parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Parse);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }

        std::istringstream ragged("x,y\n1\n");
        CHECK_THROWS_AS(csv::read(ragged), Error);
        std::istringstream empty("# nothing\n");
        CHECK_THROWS_AS(csv::read(empty), Error);
        CHECK_THROWS_AS(csv::read_file("/nonexistent/file.csv"), Error);
    }

    TEST_CASE("exact formatting round-trips doubles")
    {
        RandomStream rng(7, 0);
        for (int i = 0; i < 1000; ++i) {
            const double v = (rng.uniform() - 0.5) * std::pow(10.0, 40.0 * rng.uniform() - 20.0);
            CHECK(std::stod(csv::format_exact(v)) == v);
        }
        CHECK(csv::format_digits(1.0435e-7, 3) == "1.04e-07");
        CHECK(csv::format_digits(0.0, 3) == "0");
    }

    TEST_CASE("random streams are reproducible and distinct")
    {
        RandomStream a(1, 2), b(1, 2), c(1, 3), d(2, 2);
        bool differ_c = false, differ_d = false;
        for (int i = 0; i < 100; ++i) {
            const double va = a.uniform();
            CHECK(va == b.uniform());
            CHECK(va >= 0.0);
            CHECK(va < 1.0);
            differ_c |= va != c.uniform();
            differ_d |= va != d.uniform();
        }
        CHECK(differ_c);
        CHECK(differ_d);

        RandomStream n(0, 0);
        double s = 0.0, s2 = 0.0;
        const int N = 200000;
        for (int i = 0; i < N; ++i) {
            const double x = n.normal();
            s += x;
            s2 += x * x;
        }
        CHECK(std::abs(s / N) < 0.01);
        CHECK(std::abs(s2 / N - 1.0) < 0.02);
    }

    TEST_CASE("parallel_for fills every slot and rethrows the lowest failing index")
    {
        std::vector<int> out(1000, 0);
        parallel_for(out.size(), 8, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] == static_cast<int>(i) * 2);
        }
        try {
            parallel_for(100, 4, [](std::size_t i) {
                if (i == 37 || i == 80) {
                    throw Error(ErrorCode::NoRoot, std::to_string(i));
                }
            });
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("37") != std::string::npos);
        }
    }
}
