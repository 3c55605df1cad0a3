// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "cli_runner.hpp"

#include "spinmech/coop.hpp"
#include "spinmech/dipole.hpp"
#include "spinmech/echo.hpp"
#include "spinmech/field_map.hpp"
#include "spinmech/mech.hpp"
#include "spinmech/register.hpp"
#include "spinmech/spinmodel.hpp"
#include "spinmech/synth.hpp"
#include "spinmech/transport.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace spinmech;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

constexpr double kLambda2pi = 7.7;
constexpr double kDx = 1.86e-9;
constexpr double kFr = 1.4e6;
constexpr double kZp = 1.146e-14;

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome mc_vs_closed_form()
{
    const auto t0 = std::chrono::steady_clock::now();
    const Coupling c = Coupling::from_hz(kLambda2pi, kZp, kFr);
    McOptions o;
    o.samples = 100000;
    o.seed = 0;
    double worst_ratio = 0.0;
    double worst_abs = 0.0;
    bool ok = true;
    for (int k = 1; k <= 50; ++k) {
        const double tau = 2.0 / kFr * k / 50.0;
        const auto mc = mc_contrast(c, kDx, tau, o);
        const double diff = std::abs(mc.estimate - thermal_contrast(c, kDx, tau));
        const double bound = std::max(0.01, 3.0 * mc.std_error);
        ok = ok && diff < bound;
        worst_abs = std::max(worst_abs, diff);
        worst_ratio = std::max(worst_ratio, diff / bound);
    }
    const double elapsed = seconds_since(t0);
    return {ok && elapsed < 10.0,
            fmt("max |mc - closed| = %.3g (%.2f of bound), %.2f s", worst_abs, worst_ratio, elapsed)};
}

Outcome rayleigh_bessel_identity()
{
    const Coupling c = Coupling::from_hz(kLambda2pi, kZp, kFr);
    double worst = 0.0;
    for (int k = 1; k <= 30; ++k) {
        const double tau = 2.0 / kFr * k / 30.0;
        // Simpson over x0 ∈ [0, 14Δx] against the Rayleigh density.
        const int n = 20000;
        const double b = 14.0 * kDx, h = b / n;
        double s = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = i * h;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * coherent_contrast(c, x, tau) * x / (kDx * kDx) * std::exp(-x * x / (2.0 * kDx * kDx));
        }
        worst = std::max(worst, std::abs(s * h / 3.0 - thermal_contrast(c, kDx, tau)));
    }
    return {worst < 1e-8, fmt("max abs error %.3g", worst)};
}

Outcome table_reproduction()
{
    const auto rows = table(coop_rows_from_csv(csv::read_file(std::string(SPINMECH_DATA_DIR) + "/cooperativity_rows.csv")));
    if (rows.size() != 4) {
        return {false, "expected 4 shipped rows"};
    }
    const double reference[4] = {1.0e-7, 2.8e-10, 1.8e-10, 2.8e-10};
    const double tol[4] = {0.1, 0.1, 0.3, 0.3};
    bool ok = true;
    std::string detail;
    for (int i = 0; i < 4; ++i) {
        const double r = std::abs(rows[i].cooperativity - reference[i]) / reference[i];
        ok = ok && r < tol[i];
        detail += (i ? ", " : "") + rows[i].inputs.label + fmt("=%.3g", rows[i].cooperativity);
    }
    return {ok, detail};
}

Outcome projection()
{
    Scenario s;
    s.lambda_over_2pi = 800.0;
    s.t2 = 1e-2;
    s.q_factor = 1e9;
    s.f_r = 1.4e6;
    s.temperature = 4.0;
    const auto p = project_scenario(s);
    return {p.cooperativity >= 67.0 && p.cooperativity <= 83.0,
            fmt("C = %.4g (nκ/2π = %.4g Hz)", p.cooperativity, p.n_kappa_over_2pi)};
}

Outcome lambda_fit_recovery()
{
    int pass = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto curve = synth_echo_curve(kLambda2pi, kDx, kFr, kZp, 50, 2.0 / kFr, 0.01, seed);
        const auto fit = fit_coupling(curve, kDx, kTwoPi * kFr, kZp);
        const double r = std::abs(fit.lambda_over_2pi() - kLambda2pi) / kLambda2pi;
        pass += r < 0.05;
        worst = std::max(worst, r);
    }
    return {pass >= 95, fmt("%.0f/100 seeds within 5%%, worst %.3g relative", pass, worst)};
}

Outcome transport_phase()
{
    const auto p = sinusoidal_profile(9.8e6, 1.7e-3, 1701);
    const double step = 1.7e-3 / 1700.0;
    const double t_pi = solve_pi_time(p);
    const double full = nuclear_phase(p, p.t_move());
    return {std::abs(t_pi - 0.85e-3) <= step && full > kTwoPi,
            fmt("t_pi = %.6g s, uncanceled phase = %.4g rad (%.4g cycles)", t_pi, full, full / kTwoPi)};
}

double sinusoid_residual(const std::vector<double>& theta, const std::vector<double>& y)
{
    const auto n = static_cast<Eigen::Index>(theta.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a.row(i) << 1.0, std::cos(theta[i]), std::sin(theta[i]);
        b[i] = y[i];
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
    return (a * x - b).cwiseAbs().maxCoeff();
}

Outcome coherence_preservation()
{
    const auto moved = sinusoidal_profile(9.8e6, 1.7e-3, 1701);
    SequenceConfig cfg;
    cfg.tau = 0.3e-6;
    cfg.t_pi = solve_pi_time(moved);
    SequenceConfig still = cfg;
    still.t_pi = 0.5 * still.t_move;
    std::vector<double> theta(128);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(theta.size());
    }
    const auto a = theta_scan(cfg, moved, theta);
    const auto b = theta_scan(still, zero_profile(still.t_move), theta);
    double diff = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    const double res = std::max(sinusoid_residual(theta, a), sinusoid_residual(theta, b));
    return {diff < 1e-9 && res < 1e-10, fmt("max moved-stationary %.3g, sinusoid residual %.3g", diff, res)};
}

Outcome inversion_roundtrips()
{
    const SpinParams P;
    RandomStream rng(2024, 0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const FieldComponents f{0.05 * rng.uniform(), 0.005 * rng.uniform()};
        const auto back = invert_field(P, esr_frequencies(P, f));
        worst = std::max({worst, std::abs(back.bz - f.bz), std::abs(back.bx - f.bx)});
    }

    // Noiseless planted map from the synthetic generator, 10% perturbed start.
    auto fixture = [](const SynthParams& over) {
        std::ostringstream out;
        generate_synthetic("dipole-map", over, 0, out);
        std::istringstream in(out.str());
        return field_map_from_csv(csv::read(in));
    };
    const auto d = synth_defaults("dipole-map");
    const Dipole planted{{d.at("m_x_am2"), d.at("m_y_am2"), d.at("m_z_am2")},
                         Vec3(d.at("dipole_x_um"), d.at("dipole_y_um"), d.at("dipole_z_um")) * 1e-6};
    const NvAxis nv(Vec3(d.at("nv_x"), d.at("nv_y"), d.at("nv_z")));
    const double h = d.at("scan_height_um") * 1e-6;
    Dipole init = planted;
    init.moment *= 1.1;
    init.position += Vec3(0.1e-6, -0.1e-6, 0.1e-6);
    const auto clean = fit_dipole(fixture({}), nv, h, init);
    const double m_err = (clean.dipole.moment - planted.moment).norm() / planted.moment.norm();
    const double p_err = (clean.dipole.position - planted.position).norm() / h;

    const auto noisy = fit_dipole(fixture({{"noise_tesla", 1e-4}}), nv, h);
    const double max_res_gauss = noisy.report.max_residual / constants::gauss;

    return {worst < 1e-7 && m_err < 1e-6 && p_err < 1e-6 && max_res_gauss <= 3.0,
            fmt("ESR roundtrip %.3g T; dipole moment/position rel err %.3g/%.3g", worst, m_err, p_err) +
                fmt("; 1 G noise max residual %.3g G", max_res_gauss)};
}

Outcome mechanical_fits()
{
    const auto psd = synth_psd(1.4e6, 1.5, kDx, 1000.0, 20001, 0.0, 0.0, 0);
    const auto lf = fit_lorentzian(psd);
    const auto rd = fit_ringdown(synth_ringdown(1.4e6, 8.25e5, 1e-9, 0.5, 200, 0.0, 0), 1.4e6);
    const double rms = rms_from_psd(psd, psd.t.front(), psd.t.back());
    const double e_f = std::abs(lf.frequency - 1.4e6) / 1.4e6;
    const double e_k = std::abs(lf.kappa_over_2pi - 1.5) / 1.5;
    const double e_q = std::abs(rd.q_factor - 8.25e5) / 8.25e5;
    const double e_x = std::abs(rms - kDx) / kDx;
    return {e_f < 0.01 && e_k < 0.01 && e_q < 0.01 && e_x < 0.005,
            fmt("rel err f_r %.2g, kappa %.2g, Q %.2g", e_f, e_k, e_q) + fmt(", delta_x %.3g", e_x)};
}

Outcome ramsey_fringes()
{
    // Series from the CLI command itself, default grid (256 points, 50 ns step).
    const auto r = testing::run_cli({"register", "ramsey"});
    if (r.code != 0) {
        return {false, "register ramsey exited " + std::to_string(r.code)};
    }
    std::istringstream in(r.out);
    const auto t = csv::read(in);
    const auto x = t.numbers("x");
    const auto y = t.numbers("contrast");
    const std::size_t n = y.size();
    const double dt = x[1] - x[0];
    double mean = 0.0;
    for (double v : y) {
        mean += v / static_cast<double>(n);
    }
    // Naive DFT of the mean-removed series.
    std::size_t best = 1;
    double best_power = -1.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += (y[i] - mean) * std::polar(1.0, -kTwoPi * static_cast<double>(k * i) / static_cast<double>(n));
        }
        if (std::norm(s) > best_power) {
            best_power = std::norm(s);
            best = k;
        }
    }
    const double bin = 1.0 / (static_cast<double>(n) * dt);
    const double peak = static_cast<double>(best) * bin;
    return {std::abs(peak - 0.9e6) <= bin, fmt("peak %.4g Hz, bin %.4g Hz", peak, bin)};
}

Outcome cli_determinism()
{
    testing::TempDir dir("acceptance");
    if (!testing::write_fixtures(dir)) {
        return {false, "fixture generation failed"};
    }
    int checked = 0;
    for (auto cmd : testing::all_commands(dir)) {
        std::vector<std::string> base{"--seed", "11"};
        base.insert(base.end(), cmd.begin(), cmd.end());
        auto with_threads = [&](const char* n) {
            std::vector<std::string> a{"--threads", n};
            a.insert(a.end(), base.begin(), base.end());
            return testing::run_cli(a);
        };
        const auto a = with_threads("1");
        const auto b = with_threads("1");
        const auto c = with_threads("8");
        std::string name;
        for (const auto& s : cmd) {
            name += (name.empty() ? "" : " ") + s;
            if (name.size() > 24) {
                break;
            }
        }
        if (a.code != 0) {
            return {false, "'" + name + "' exited " + std::to_string(a.code) + ": " + a.err};
        }
        if (a.out != b.out || a.out != c.out || a.code != c.code || a.out.empty()) {
            return {false, "'" + name + "' output differs between runs or thread counts"};
        }
        ++checked;
    }
    return {true, std::to_string(checked) + " commands byte-identical across runs and --threads 1/8"};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"closed-form vs Monte Carlo echo", mc_vs_closed_form},
        {"Rayleigh-Bessel identity", rayleigh_bessel_identity},
        {"cooperativity table", table_reproduction},
        {"cooperativity projection", projection},
        {"coupling fit recovery", lambda_fit_recovery},
        {"transport phase and pi time", transport_phase},
        {"coherence preservation", coherence_preservation},
        {"inversion roundtrips", inversion_roundtrips},
        {"mechanical fits", mechanical_fits},
        {"Ramsey fringe frequency", ramsey_fringes},
        {"CLI determinism", cli_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %2zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
