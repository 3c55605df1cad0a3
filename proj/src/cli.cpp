#include "spinmech/cli.hpp"

#include "spinmech/coop.hpp"
#include "spinmech/csv.hpp"
#include "spinmech/dipole.hpp"
#include "spinmech/echo.hpp"
#include "spinmech/field_map.hpp"
#include "spinmech/mech.hpp"
#include "spinmech/parallel.hpp"
#include "spinmech/register.hpp"
#include "spinmech/spinmodel.hpp"
#include "spinmech/synth.hpp"
#include "spinmech/transport.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace spinmech::cli {

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::OutOfRange:
    case ErrorCode::Parse:
    case ErrorCode::InvalidProbability:
    case ErrorCode::UnknownKind:
    case ErrorCode::EmptyBand:
        return kInput;
    case ErrorCode::NoConvergence:
    case ErrorCode::AllInvalid:
    case ErrorCode::SingularPoint:
    case ErrorCode::DegenerateMap:
    case ErrorCode::NoPeak:
    case ErrorCode::NotDecaying:
    case ErrorCode::Underdetermined:
    case ErrorCode::NoRoot:
        return kNumerical;
    case ErrorCode::Io:
        return kIo;
    }
    return kNumerical;
}

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Vec3 to_vec3(const std::vector<double>& v, const std::string& what)
{
    require(v.size() == 3, ErrorCode::InvalidArgument, what + " needs 3 components");
    return {v[0], v[1], v[2]};
}

TimeSeries series_from(const csv::Table& t, const std::string& x, const std::string& y)
{
    return {t.numbers(x), t.numbers(y)};
}

// State shared by every command of one dispatch call.
struct Context {
    unsigned threads = default_thread_count();
    std::uint64_t seed = 0;
    int digits = 3;
    std::string out_path;
    std::string config_path;
    CLI::Option* seed_opt = nullptr;
    std::ostream* err = nullptr;
    std::function<void(std::ostream&)> action;

    void seed_notice() const
    {
        if (seed_opt->count() == 0) {
            *err << "notice: no --seed given, using seed 0\n";
        }
    }

    std::string num(double v) const { return csv::format_digits(v, digits); }

    void kv(std::ostream& out, const std::vector<std::pair<std::string, double>>& items) const
    {
        for (std::size_t i = 0; i < items.size(); ++i) {
            out << (i ? "," : "") << items[i].first << '=' << num(items[i].second);
        }
        out << '\n';
    }
};

struct SpinOpts {
    SpinParams params;
    void add(CLI::App* app)
    {
        app->add_option("--d-hz,--zero-field-splitting-hz", params.zero_field_splitting, "zero-field splitting D, Hz")
            ->capture_default_str();
        app->add_option("--gamma-e-hz-per-tesla", params.gamma_e, "electron gyromagnetic ratio, Hz/T")
            ->capture_default_str();
    }
};

struct CouplingOpts {
    double lambda_hz = 7.7;
    double delta_x = 1.86e-9;
    double f_r = 1.4e6;
    double z_p = 0.0;
    double m_eff = constants::default_m_eff;

    void add(CLI::App* app, bool with_lambda)
    {
        if (with_lambda) {
            app->add_option("--lambda,--lambda-over-2pi-hz", lambda_hz, "coupling λ/2π, Hz")->capture_default_str();
        }
        app->add_option("--delta-x-m", delta_x, "thermal RMS amplitude Δx, m")->capture_default_str();
        app->add_option("--f-r-hz", f_r, "mechanical frequency, Hz")->capture_default_str();
        app->add_option("--z-p-m", z_p, "zero-point motion, m (0: from --m-eff-kg and --f-r-hz)");
        app->add_option("--m-eff-kg", m_eff, "effective mass, kg")->capture_default_str();
    }
    double zpm() const { return z_p > 0.0 ? z_p : zero_point_motion(m_eff, f_r); }
    Coupling coupling() const { return Coupling::from_hz(lambda_hz, zpm(), f_r); }
};

struct TauGridOpts {
    double tau_max = 0.0;
    std::size_t n = 50;
    void add(CLI::App* app, std::size_t default_n, const std::string& what)
    {
        n = default_n;
        app->add_option("--tau-max-s", tau_max, "largest τ, s (0: two mechanical periods)");
        app->add_option("--n-points", n, "number of " + what + " points")->capture_default_str();
    }
    // τ_k = τ_max·k/n, k = 1..n.
    std::vector<double> grid(double fallback_tau_max, bool include_zero = false) const
    {
        require(n >= 1, ErrorCode::InvalidArgument, "need at least one τ point");
        const double tmax = tau_max > 0.0 ? tau_max : fallback_tau_max;
        std::vector<double> g(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double idx = include_zero ? static_cast<double>(k) : static_cast<double>(k + 1);
            g[k] = tmax * idx / static_cast<double>(n);
        }
        return g;
    }
};

struct SequenceOpts {
    std::string sequence_path;
    std::string profile_path;
    double tau = kUnset, theta = kUnset, f_acc = kUnset, polarization = kUnset, t_pi = kUnset, t_move = kUnset,
           pi_duration = kUnset;
    std::vector<double> branch_hz;
    std::vector<double> branch_prob;
    double gamma_e = constants::gamma_e;
    double gamma_n = constants::gamma_n15;

    void add(CLI::App* app)
    {
        app->add_option("--sequence", sequence_path, "sequence config JSON file");
        app->add_option("--profile", profile_path, "detuning profile CSV (t_s,delta_e_hz); omitted: stationary");
        app->add_option("--tau-s", tau, "entangled accumulation interval τ, s");
        app->add_option("--theta-rad", theta, "final π/2 axis angle θ, rad");
        app->add_option("--f-acc-hz", f_acc, "¹³C branch detuning f_acc, Hz");
        app->add_option("--polarization", polarization, "nuclear polarization p in [0, 1]");
        app->add_option("--t-pi-s", t_pi, "nuclear π time, s (default: solved from the profile)");
        app->add_option("--t-move-s", t_move, "movement duration, s");
        app->add_option("--pi-duration-s", pi_duration, "nuclear π pulse length, s (timing budget)");
        app->add_option("--branch-hz", branch_hz, "explicit ¹³C branch detunings, Hz")->delimiter(',');
        app->add_option("--branch-prob", branch_prob, "branch probabilities (sum to 1)")->delimiter(',');
        app->add_option("--gamma-e-hz-per-tesla", gamma_e, "electron gyromagnetic ratio, Hz/T")->capture_default_str();
        app->add_option("--gamma-n-hz-per-tesla", gamma_n, "¹⁵N gyromagnetic ratio magnitude, Hz/T")
            ->capture_default_str();
    }

    struct Resolved {
        SequenceConfig cfg;
        DetuningProfile profile;
    };

    Resolved resolve(std::ostream& err) const
    {
        Resolved r;
        bool t_pi_given = !std::isnan(t_pi);
        bool t_move_given = !std::isnan(t_move);
        if (!sequence_path.empty()) {
            const std::string text = read_text(sequence_path);
            r.cfg = sequence_config_from_json(text);
            const auto j = nlohmann::json::parse(text);
            t_pi_given = t_pi_given || j.contains("t_pi_s");
            t_move_given = t_move_given || j.contains("t_move_s");
        }
        auto set = [](double v, double& field) {
            if (!std::isnan(v)) {
                field = v;
            }
        };
        set(tau, r.cfg.tau);
        set(theta, r.cfg.theta);
        set(f_acc, r.cfg.f_acc);
        set(polarization, r.cfg.nuclear_polarization);
        set(t_pi, r.cfg.t_pi);
        set(t_move, r.cfg.t_move);
        set(pi_duration, r.cfg.nuclear_pi_duration);
        require(branch_hz.size() == branch_prob.size(), ErrorCode::InvalidArgument,
                "--branch-hz and --branch-prob need the same length");
        if (!branch_hz.empty()) {
            r.cfg.branches.clear();
            for (std::size_t i = 0; i < branch_hz.size(); ++i) {
                r.cfg.branches.push_back({branch_hz[i], branch_prob[i]});
            }
        }
        if (profile_path.empty()) {
            r.profile = zero_profile(r.cfg.t_move);
            if (!t_pi_given) {
                r.cfg.t_pi = 0.5 * r.cfg.t_move;
            }
        } else {
            r.profile = profile_from_csv(csv::read_file(profile_path), gamma_n / gamma_e);
            if (!t_move_given) {
                r.cfg.t_move = r.profile.t_move();
            }
            if (!t_pi_given) {
                r.cfg.t_pi = solve_pi_time(r.profile);
            }
        }
        if (auto w = timing_warning(r.cfg)) {
            err << "warning: " << *w << '\n';
        }
        return r;
    }
};

// Appends config-file values for options of the selected command that were
// not given on the command line.
void merge_config(CLI::App& root, std::vector<std::string>& args, const std::string& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, "config '" + path + "': " + e.what());
    }
    require(j.is_object(), ErrorCode::Parse, "config must be a JSON object");

    std::vector<CLI::App*> chain{&root};
    for (const auto& a : args) {
        if (a.empty() || a[0] == '-') {
            continue;
        }
        CLI::App* sub = nullptr;
        try {
            sub = chain.back()->get_subcommand(a);
        } catch (const CLI::OptionNotFound&) {
        }
        if (sub) {
            chain.push_back(sub);
        }
    }

    nlohmann::json flat = nlohmann::json::object();
    for (const auto& [k, v] : j.items()) {
        if (!v.is_object()) {
            flat[k] = v;
        }
    }
    // Nested sections {"group": {"command": {...}}} override flat keys.
    const nlohmann::json* level = &j;
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const std::string name = chain[i]->get_name();
        if (!level->contains(name) || !level->at(name).is_object()) {
            break;
        }
        level = &level->at(name);
        for (const auto& [k, v] : level->items()) {
            if (!v.is_object()) {
                flat[k] = v;
            }
        }
    }

    for (const auto& [key, value] : flat.items()) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        CLI::Option* opt = nullptr;
        for (auto it = chain.rbegin(); it != chain.rend() && !opt; ++it) {
            opt = (*it)->get_option_no_throw("--" + name);
        }
        require(opt != nullptr, ErrorCode::Parse, "config key '" + key + "' is not an option of this command");
        bool given = false;
        for (const auto& ln : opt->get_lnames()) {
            for (const auto& a : args) {
                if (a == "--" + ln || a.rfind("--" + ln + "=", 0) == 0) {
                    given = true;
                }
            }
        }
        if (given) {
            continue;
        }
        auto text = [](const nlohmann::json& v) -> std::string {
            if (v.is_string()) {
                return v.get<std::string>();
            }
            if (v.is_number_integer()) {
                return std::to_string(v.get<long long>());
            }
            if (v.is_number()) {
                return csv::format_exact(v.get<double>());
            }
            throw Error(ErrorCode::Parse, "unsupported config value " + v.dump());
        };
        if (value.is_boolean()) {
            if (value.get<bool>()) {
                args.push_back("--" + name);
            }
        } else if (value.is_array()) {
            for (const auto& v : value) {
                args.push_back("--" + name);
                args.push_back(text(v));
            }
        } else {
            args.push_back("--" + name);
            args.push_back(text(value));
        }
    }
}

void build(CLI::App& app, Context& ctx)
{
    app.require_subcommand(1);
    app.add_option("--threads", ctx.threads, "worker threads (default: SPINMECH_THREADS or 1)");
    ctx.seed_opt = app.add_option("--seed", ctx.seed, "random seed (default 0)");
    app.add_option("--digits", ctx.digits, "significant digits of key=value summaries")->capture_default_str();
    app.add_option("--out", ctx.out_path, "write the primary output to this file instead of stdout");
    app.add_option("--config", ctx.config_path, "JSON file of option values; command-line flags win");

    auto group = [&](const std::string& name, const std::string& desc) {
        CLI::App* g = app.add_subcommand(name, desc);
        g->require_subcommand(1);
        g->fallthrough();
        return g;
    };
    auto leaf = [](CLI::App* g, const std::string& name, const std::string& desc) {
        CLI::App* c = g->add_subcommand(name, desc);
        c->fallthrough();
        return c;
    };

    // ---- esr
    CLI::App* esr = group("esr", "single-pixel ESR forward model and field inversion");
    {
        auto* c = leaf(esr, "invert", "ESR pair → |Bz|, Bx (tesla)");
        auto spin = std::make_shared<SpinOpts>();
        auto f = std::make_shared<EsrPair>();
        c->add_option("--fminus,--f-minus-hz", f->f_minus, "lower ESR frequency, Hz")->required();
        c->add_option("--fplus,--f-plus-hz", f->f_plus, "upper ESR frequency, Hz")->required();
        spin->add(c);
        c->callback([&ctx, spin, f] {
            ctx.action = [&ctx, spin, f](std::ostream& out) {
                const FieldComponents b = invert_field(spin->params, *f);
                ctx.kv(out, {{"bz_tesla", b.bz}, {"bx_tesla", b.bx}});
            };
        });
    }
    {
        auto* c = leaf(esr, "forward", "field → ESR pair (Hz)");
        auto spin = std::make_shared<SpinOpts>();
        auto b = std::make_shared<FieldComponents>();
        c->add_option("--bz-tesla", b->bz, "axial field, T")->required();
        c->add_option("--bx-tesla", b->bx, "transverse field, T")->capture_default_str();
        spin->add(c);
        c->callback([&ctx, spin, b] {
            ctx.action = [&ctx, spin, b](std::ostream& out) {
                const EsrPair e = esr_frequencies(spin->params, *b);
                ctx.kv(out, {{"f_minus_hz", e.f_minus}, {"f_plus_hz", e.f_plus}});
            };
        });
    }

    // ---- map
    CLI::App* map = group("map", "scan-map inversion, interpolation, dipole fitting and gradients");
    {
        auto* c = leaf(map, "invert", "ESR map CSV → axial field map CSV");
        auto spin = std::make_shared<SpinOpts>();
        auto in = std::make_shared<std::string>();
        c->add_option("--in", *in, "ESR map CSV (x_um,y_um,f_minus_hz,f_plus_hz,valid)")->required();
        spin->add(c);
        c->callback([&ctx, spin, in] {
            ctx.action = [&ctx, spin, in](std::ostream& out) {
                const auto res = map_to_axial_field(spin->params, esr_map_from_csv(csv::read_file(*in)), ctx.threads);
                *ctx.err << "inverted " << res.report.inverted << " pixels, " << res.report.failures
                         << " marked invalid\n";
                write_field_map(out, res.map);
            };
        });
    }
    {
        auto* c = leaf(map, "interp", "fill invalid pixels from valid neighbours");
        auto in = std::make_shared<std::string>();
        auto column = std::make_shared<std::string>();
        c->add_option("--in", *in, "field map CSV")->required();
        c->add_option("--column", *column, "value column (default bz_tesla or bz_gauss)");
        c->callback([&ctx, in, column] {
            ctx.action = [in, column](std::ostream& out) {
                const FieldMap m = field_map_from_csv(csv::read_file(*in), *column);
                write_field_map(out, interpolate_missing(m), column->empty() ? "bz_tesla" : *column);
            };
        });
    }
    {
        auto* c = leaf(map, "fit-dipole", "fit a point dipole to an axial field map; JSON report");
        struct Opts {
            std::string in, column, init;
            double scan_height = 0.0;
            std::vector<double> nv{0.0, 0.0, 1.0};
            int max_iterations = 200;
        };
        auto o = std::make_shared<Opts>();
        c->add_option("--in", o->in, "field map CSV (x_um,y_um,bz_tesla,valid)")->required();
        c->add_option("--column", o->column, "value column (default bz_tesla or bz_gauss)");
        c->add_option("--scan-height-m", o->scan_height, "height of the scan plane, m")->capture_default_str();
        c->add_option("--nv-axis", o->nv, "NV quantization axis x,y,z (normalised)")->expected(3)->delimiter(',');
        c->add_option("--init", o->init, "initial dipole JSON (default: grid-search seed)");
        c->add_option("--max-iterations", o->max_iterations, "LM iteration limit")->capture_default_str();
        c->callback([&ctx, o] {
            ctx.action = [o](std::ostream& out) {
                const FieldMap m = field_map_from_csv(csv::read_file(o->in), o->column);
                std::optional<Dipole> init;
                if (!o->init.empty()) {
                    init = dipole_from_json(read_text(o->init));
                }
                const auto fit = fit_dipole(m, NvAxis(to_vec3(o->nv, "--nv-axis")), o->scan_height, init,
                                            {o->max_iterations});
                auto j = nlohmann::json::parse(dipole_to_json(fit.dipole));
                j["rms_residual_tesla"] = fit.report.rms_residual;
                j["max_residual_tesla"] = fit.report.max_residual;
                j["iterations"] = fit.report.iterations;
                j["converged"] = fit.report.converged;
                std::vector<double> sigma(6);
                for (int i = 0; i < 6; ++i) {
                    sigma[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, fit.report.covariance(i, i)));
                }
                j["sigma"] = sigma;
                out << j.dump(2) << '\n';
            };
        });
    }
    {
        auto* c = leaf(map, "gradient", "axial field gradient map of a dipole; CSV x_um,y_um,grad_t_per_m");
        struct Opts {
            std::string dipole;
            std::size_t nx = 21, ny = 21;
            double x0 = -2.5, y0 = -2.5, pitch = 0.25, scan_height = 0.0;
            std::vector<double> nv{0.0, 0.0, 1.0}, motion{1.0, 0.0, 0.0};
        };
        auto o = std::make_shared<Opts>();
        c->add_option("--dipole", o->dipole, "dipole JSON file")->required();
        c->add_option("--nx", o->nx, "pixels along x")->capture_default_str();
        c->add_option("--ny", o->ny, "pixels along y")->capture_default_str();
        c->add_option("--x0-um", o->x0, "first pixel x, µm")->capture_default_str();
        c->add_option("--y0-um", o->y0, "first pixel y, µm")->capture_default_str();
        c->add_option("--pitch-um", o->pitch, "pixel pitch, µm")->capture_default_str();
        c->add_option("--scan-height-m", o->scan_height, "height of the scan plane, m")->capture_default_str();
        c->add_option("--nv-axis", o->nv, "NV quantization axis x,y,z")->expected(3)->delimiter(',');
        c->add_option("--motion-axis", o->motion, "motion direction x,y,z")->expected(3)->delimiter(',');
        c->callback([&ctx, o] {
            ctx.action = [&ctx, o](std::ostream& out) {
                GridGeometry g{o->nx, o->ny, o->x0 * 1e-6, o->y0 * 1e-6, o->pitch * 1e-6, o->pitch * 1e-6};
                g.validate();
                const auto gm = gradient_map(dipole_from_json(read_text(o->dipole)), g, o->scan_height,
                                             NvAxis(to_vec3(o->nv, "--nv-axis")), to_vec3(o->motion, "--motion-axis"),
                                             ctx.threads);
                *ctx.err << "max |gradient| = " << ctx.num(gm.max_abs_gradient) << " T/m\n";
                out << "x_um,y_um,grad_t_per_m\n";
                for (std::size_t i = 0; i < g.size(); ++i) {
                    out << csv::format_exact(g.x(i % g.nx) * 1e6) << ',' << csv::format_exact(g.y(i / g.nx) * 1e6)
                        << ',' << csv::format_exact(gm.map.values[i]) << '\n';
                }
            };
        });
    }

    // ---- mech
    CLI::App* mech = group("mech", "mechanical resonator characterisation");
    {
        auto* c = leaf(mech, "fit-psd", "Lorentzian fit of a displacement PSD; JSON report");
        auto in = std::make_shared<std::string>();
        c->add_option("--in", *in, "PSD CSV (freq_hz,psd_m2_per_hz)")->required();
        c->callback([&ctx, in] {
            ctx.action = [in](std::ostream& out) {
                const auto fit = fit_lorentzian(series_from(csv::read_file(*in), "freq_hz", "psd_m2_per_hz"));
                nlohmann::json j;
                j["frequency_hz"] = fit.frequency;
                j["kappa_over_2pi_hz"] = fit.kappa_over_2pi;
                j["q_factor"] = fit.frequency / fit.kappa_over_2pi;
                j["peak_area_m2"] = fit.peak_area;
                j["delta_x_m"] = std::sqrt(std::max(0.0, fit.peak_area));
                j["offset_m2_per_hz"] = fit.offset;
                j["rms_residual"] = fit.report.rms_residual;
                j["iterations"] = fit.report.iterations;
                out << j.dump(2) << '\n';
            };
        });
    }
    {
        auto* c = leaf(mech, "fit-ringdown", "exponential ringdown fit; JSON report");
        auto in = std::make_shared<std::string>();
        auto f = std::make_shared<double>(1.4e6);
        c->add_option("--in", *in, "ringdown CSV (t_s,amplitude_m)")->required();
        c->add_option("--f-r-hz", *f, "mode frequency, Hz")->capture_default_str();
        c->callback([&ctx, in, f] {
            ctx.action = [in, f](std::ostream& out) {
                const auto fit = fit_ringdown(series_from(csv::read_file(*in), "t_s", "amplitude_m"), *f);
                nlohmann::json j;
                j["q_factor"] = fit.q_factor;
                j["amplitude0_m"] = fit.amplitude0;
                j["decay_time_s"] = fit.decay_time;
                j["rms_residual"] = fit.report.rms_residual;
                j["iterations"] = fit.report.iterations;
                out << j.dump(2) << '\n';
            };
        });
    }
    {
        auto* c = leaf(mech, "rms", "RMS displacement from a PSD band");
        auto in = std::make_shared<std::string>();
        auto band = std::make_shared<std::pair<double, double>>(0.0, std::numeric_limits<double>::infinity());
        c->add_option("--in", *in, "PSD CSV (freq_hz,psd_m2_per_hz)")->required();
        c->add_option("--f-lo-hz", band->first, "band start, Hz (default: record start)");
        c->add_option("--f-hi-hz", band->second, "band end, Hz (default: record end)");
        c->callback([&ctx, in, band] {
            ctx.action = [&ctx, in, band](std::ostream& out) {
                const double dx = rms_from_psd(series_from(csv::read_file(*in), "freq_hz", "psd_m2_per_hz"),
                                               band->first, band->second);
                ctx.kv(out, {{"delta_x_m", dx}});
            };
        });
    }
    {
        auto* c = leaf(mech, "zpm", "zero-point motion and thermal occupation");
        auto r = std::make_shared<Resonator>();
        c->add_option("--m-eff-kg", r->m_eff, "effective mass, kg")->capture_default_str();
        c->add_option("--f-r-hz", r->frequency, "mode frequency, Hz")->capture_default_str();
        c->add_option("--temperature-k", r->temperature, "bath temperature, K")->capture_default_str();
        c->callback([&ctx, r] {
            ctx.action = [&ctx, r](std::ostream& out) {
                ctx.kv(out, {{"z_p_m", zero_point_motion(*r)},
                             {"n_th", thermal_occupation(r->temperature, r->frequency)}});
            };
        });
    }

    // ---- echo
    CLI::App* echo = group("echo", "Hahn-echo spin-mechanics signal");
    {
        auto* c = leaf(echo, "analytic", "closed-form echo contrast; CSV tau_s,contrast");
        struct Opts {
            CouplingOpts coupling;
            TauGridOpts grid;
            double t2 = 0.0, exponent = 3.0, alpha = 1.0;
        };
        auto o = std::make_shared<Opts>();
        o->coupling.add(c, true);
        o->grid.add(c, 50, "τ");
        c->add_option("--t2-s", o->t2, "spin T2, s (0: no intrinsic decoherence)");
        c->add_option("--exponent", o->exponent, "decoherence stretch exponent")->capture_default_str();
        c->add_option("--alpha", o->alpha, "contrast scale α")->capture_default_str();
        c->callback([&ctx, o] {
            ctx.action = [o](std::ostream& out) {
                const Coupling cp = o->coupling.coupling();
                cp.validate();
                const auto taus = o->grid.grid(2.0 / o->coupling.f_r);
                out << "tau_s,contrast\n";
                for (double tau : taus) {
                    double v = o->alpha * thermal_contrast(cp, o->coupling.delta_x, tau);
                    if (o->t2 > 0.0) {
                        v = signal_with_decoherence(cp, o->coupling.delta_x, tau, {o->t2, o->exponent}, o->alpha);
                    }
                    out << csv::format_exact(tau) << ',' << csv::format_exact(v) << '\n';
                }
            };
        });
    }
    {
        auto* c = leaf(echo, "mc", "Monte Carlo echo contrast over thermal draws; CSV tau_s,contrast,std_error");
        struct Opts {
            CouplingOpts coupling;
            TauGridOpts grid;
            std::size_t samples = 100000;
        };
        auto o = std::make_shared<Opts>();
        o->coupling.add(c, true);
        o->grid.add(c, 50, "τ");
        c->add_option("--samples", o->samples, "thermal draws per τ point")->capture_default_str();
        c->callback([&ctx, o] {
            ctx.action = [&ctx, o](std::ostream& out) {
                ctx.seed_notice();
                const Coupling cp = o->coupling.coupling();
                cp.validate();
                McOptions mo;
                mo.samples = o->samples;
                mo.seed = ctx.seed;
                mo.threads = ctx.threads;
                out << "tau_s,contrast,std_error\n";
                for (double tau : o->grid.grid(2.0 / o->coupling.f_r)) {
                    const auto est = mc_contrast(cp, o->coupling.delta_x, tau, mo);
                    out << csv::format_exact(tau) << ',' << csv::format_exact(est.estimate) << ','
                        << csv::format_exact(est.std_error) << '\n';
                }
            };
        });
    }
    {
        auto* c = leaf(echo, "fit", "fit λ to a normalized echo curve; JSON report");
        struct Opts {
            CouplingOpts coupling;
            std::string in;
            bool fit_alpha = false;
        };
        auto o = std::make_shared<Opts>();
        c->add_option("--in", o->in, "echo CSV (tau_s,contrast)")->required();
        o->coupling.add(c, false);
        c->add_flag("--fit-alpha", o->fit_alpha, "also fit the contrast scale α");
        c->callback([&ctx, o] {
            ctx.action = [o](std::ostream& out) {
                const auto t = csv::read_file(o->in);
                EchoCurve curve{t.numbers("tau_s"), t.numbers("contrast")};
                const auto fit = fit_coupling(curve, o->coupling.delta_x, kTwoPi * o->coupling.f_r, o->coupling.zpm(),
                                              o->fit_alpha);
                nlohmann::json j;
                j["lambda_over_2pi_hz"] = fit.lambda_over_2pi();
                j["sigma_hz"] = fit.sigma_over_2pi();
                j["alpha"] = fit.alpha;
                j["rms_residual"] = fit.rms_residual;
                out << j.dump(2) << '\n';
            };
        });
    }

    // ---- transport
    CLI::App* transport = group("transport", "movement detuning profiles and nuclear π timing");
    auto add_gammas = [](CLI::App* c, double& ge, double& gn) {
        c->add_option("--gamma-e-hz-per-tesla", ge, "electron gyromagnetic ratio, Hz/T")->capture_default_str();
        c->add_option("--gamma-n-hz-per-tesla", gn, "¹⁵N gyromagnetic ratio magnitude, Hz/T")->capture_default_str();
    };
    {
        auto* c = leaf(transport, "profile", "detuning profile of a there-and-back move; CSV t_s,delta_e_hz");
        struct Opts {
            std::string dipole;
            std::vector<double> start{0.0, 0.0, 1e-6}, displacement{1e-6, 0.0, 0.0}, nv{0.0, 0.0, 1.0};
            double t_move = 1.7e-3;
            std::size_t n = 1701;
            double ge = constants::gamma_e, gn = constants::gamma_n15;
        };
        auto o = std::make_shared<Opts>();
        c->add_option("--dipole", o->dipole, "dipole JSON file")->required();
        c->add_option("--start-m", o->start, "start position x,y,z, m")->expected(3)->delimiter(',');
        c->add_option("--displacement-m", o->displacement, "turning-point offset x,y,z, m")
            ->expected(3)
            ->delimiter(',');
        c->add_option("--nv-axis", o->nv, "NV quantization axis x,y,z")->expected(3)->delimiter(',');
        c->add_option("--t-move-s", o->t_move, "movement duration, s")->capture_default_str();
        c->add_option("--n-points", o->n, "profile grid points (≥ 64)")->capture_default_str();
        add_gammas(c, o->ge, o->gn);
        c->callback([&ctx, o] {
            ctx.action = [o](std::ostream& out) {
                const auto p = build_movement_profile(dipole_from_json(read_text(o->dipole)),
                                                      NvAxis(to_vec3(o->nv, "--nv-axis")),
                                                      to_vec3(o->start, "--start-m"),
                                                      to_vec3(o->displacement, "--displacement-m"), o->t_move, o->n,
                                                      o->ge, o->gn);
                write_profile(out, p);
            };
        });
    }
    {
        auto* c = leaf(transport, "pi-time", "solve the nuclear π time that cancels the transport phase");
        struct Opts {
            std::string in;
            double ge = constants::gamma_e, gn = constants::gamma_n15;
        };
        auto o = std::make_shared<Opts>();
        c->add_option("--in", o->in, "profile CSV (t_s,delta_e_hz)")->required();
        add_gammas(c, o->ge, o->gn);
        c->callback([&ctx, o] {
            ctx.action = [&ctx, o](std::ostream& out) {
                const auto p = profile_from_csv(csv::read_file(o->in), o->gn / o->ge);
                const double t_pi = solve_pi_time(p);
                const double full = nuclear_phase(p, p.t_move());
                ctx.kv(out, {{"t_pi_s", t_pi}, {"uncanceled_phase_rad", full}, {"uncanceled_cycles", full / kTwoPi}});
            };
        });
    }
    {
        auto* c = leaf(transport, "fringes", "cos φ_n over a uniform π-time grid; CSV x,contrast");
        struct Opts {
            std::string in;
            std::size_t n = 1001;
            double ge = constants::gamma_e, gn = constants::gamma_n15;
        };
        auto o = std::make_shared<Opts>();
        c->add_option("--in", o->in, "profile CSV (t_s,delta_e_hz)")->required();
        c->add_option("--n-points", o->n, "π-time grid points over [0, T_move]")->capture_default_str();
        add_gammas(c, o->ge, o->gn);
        c->callback([&ctx, o] {
            ctx.action = [&ctx, o](std::ostream& out) {
                const auto p = profile_from_csv(csv::read_file(o->in), o->gn / o->ge);
                require(o->n >= 2, ErrorCode::InvalidArgument, "need at least 2 grid points");
                std::vector<double> grid(o->n);
                for (std::size_t i = 0; i < o->n; ++i) {
                    grid[i] = p.t_move() * static_cast<double>(i) / static_cast<double>(o->n - 1);
                }
                const auto fr = fringe_scan(p, grid, ctx.threads);
                out << "x,contrast\n";
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    out << csv::format_exact(grid[i]) << ',' << csv::format_exact(fr[i]) << '\n';
                }
            };
        });
    }

    // ---- register
    CLI::App* reg = group("register", "electron–nuclear memory sequence");
    {
        auto* c = leaf(reg, "simulate", "one sequence run, or a θ scan with --theta-points");
        struct Opts {
            SequenceOpts seq;
            std::size_t theta_points = 0;
        };
        auto o = std::make_shared<Opts>();
        o->seq.add(c);
        c->add_option("--theta-points", o->theta_points, "θ scan over [0, 2π) with this many points; CSV x,contrast");
        c->callback([&ctx, o] {
            ctx.action = [&ctx, o](std::ostream& out) {
                const auto r = o->seq.resolve(*ctx.err);
                if (o->theta_points == 0) {
                    const auto res = simulate_memory_sequence(r.cfg, r.profile);
                    ctx.kv(out, {{"contrast", res.contrast},
                                 {"residual_phase_rad", res.residual_phase},
                                 {"t_pi_s", r.cfg.t_pi}});
                    return;
                }
                std::vector<double> thetas(o->theta_points);
                for (std::size_t i = 0; i < thetas.size(); ++i) {
                    thetas[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(thetas.size());
                }
                const auto v = theta_scan(r.cfg, r.profile, thetas, ctx.threads);
                out << "x,contrast\n";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    out << csv::format_exact(thetas[i]) << ',' << csv::format_exact(v[i]) << '\n';
                }
            };
        });
    }
    {
        auto* c = leaf(reg, "ramsey", "contrast versus τ at fixed θ; CSV x,contrast");
        struct Opts {
            SequenceOpts seq;
            TauGridOpts grid;
        };
        auto o = std::make_shared<Opts>();
        o->seq.add(c);
        o->grid.add(c, 256, "τ");
        c->callback([&ctx, o] {
            ctx.action = [&ctx, o](std::ostream& out) {
                const auto r = o->seq.resolve(*ctx.err);
                // τ_k = k·τ_max/n from k = 0; default step 50 ns.
                const auto taus = o->grid.grid(50e-9 * static_cast<double>(o->grid.n), true);
                const auto v = ramsey_vs_tau(r.cfg, r.profile, taus, ctx.threads);
                out << "x,contrast\n";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    out << csv::format_exact(taus[i]) << ',' << csv::format_exact(v[i]) << '\n';
                }
            };
        });
    }

    // ---- coop
    CLI::App* coop = group("coop", "spin-mechanical cooperativity");
    {
        auto* c = leaf(coop, "compute", "C = (λ/2π)²·T2/(nκ/2π)");
        auto in = std::make_shared<CoopInputs>();
        c->add_option("--lambda,--lambda-over-2pi-hz", in->lambda_over_2pi, "coupling λ/2π, Hz")->required();
        c->add_option("--t2,--t2-s", in->t2, "spin coherence time T2, s")->required();
        c->add_option("--nkappa,--n-kappa-over-2pi-hz", in->n_kappa_over_2pi, "thermal decoherence nκ/2π, Hz")
            ->required();
        c->callback([&ctx, in] {
            ctx.action = [&ctx, in](std::ostream& out) { out << ctx.num(cooperativity(*in)) << '\n'; };
        });
    }
    {
        auto* c = leaf(coop, "table", "cooperativity per row of a parameter table");
        auto in = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("csv");
        c->add_option("--in", *in, "rows CSV (label,lambda_over_2pi_hz,t2_s,n_kappa_over_2pi_hz)")->required();
        c->add_option("--format", *format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        c->callback([&ctx, in, format] {
            ctx.action = [in, format](std::ostream& out) {
                const auto rows = table(coop_rows_from_csv(csv::read_file(*in)));
                if (*format == "json") {
                    out << coop_table_json(rows) << '\n';
                } else {
                    write_coop_table(out, rows);
                }
            };
        });
    }
    {
        auto* c = leaf(coop, "project", "project λ, nκ and C for an improvement scenario");
        auto s = std::make_shared<Scenario>();
        c->add_option("--lambda,--lambda-over-2pi-hz", s->lambda_over_2pi, "coupling λ/2π, Hz (else from gradient)");
        c->add_option("--gradient-t-per-m", s->gradient, "field gradient along the motion, T/m");
        c->add_option("--z-p-m", s->z_p, "zero-point motion, m (0: from --m-eff-kg and --f-r-hz)");
        c->add_option("--m-eff-kg", s->m_eff, "effective mass, kg")->capture_default_str();
        c->add_option("--f-r-hz", s->f_r, "mode frequency, Hz")->capture_default_str();
        c->add_option("--q-factor", s->q_factor, "mechanical quality factor")->capture_default_str();
        c->add_option("--temperature-k", s->temperature, "bath temperature, K")->capture_default_str();
        c->add_option("--t2,--t2-s", s->t2, "spin coherence time T2, s")->capture_default_str();
        auto ge = std::make_shared<double>(constants::gamma_e);
        c->add_option("--gamma-e-hz-per-tesla", *ge, "electron gyromagnetic ratio, Hz/T")->capture_default_str();
        c->callback([&ctx, s, ge] {
            ctx.action = [&ctx, s, ge](std::ostream& out) {
                const Projection p = project_scenario(*s, *ge);
                ctx.kv(out, {{"lambda_over_2pi_hz", p.lambda_over_2pi},
                             {"n_kappa_over_2pi_hz", p.n_kappa_over_2pi},
                             {"cooperativity", p.cooperativity}});
            };
        });
    }

    // ---- synth
    {
        auto* c = app.add_subcommand("synth", "deterministic synthetic fixtures (CSV)");
        c->fallthrough();
        auto kind = std::make_shared<std::string>();
        auto params = std::make_shared<std::vector<std::string>>();
        std::string kinds;
        for (const auto& k : synth_kinds()) {
            kinds += (kinds.empty() ? "" : ", ") + k;
        }
        c->add_option("kind", *kind, "one of: " + kinds)->required();
        c->add_option("--param", *params, "override as name=value (repeatable); see --list-params");
        auto list = std::make_shared<bool>(false);
        c->add_flag("--list-params", *list, "print the parameters of this kind with their defaults");
        c->callback([&ctx, kind, params, list] {
            ctx.action = [&ctx, kind, params, list](std::ostream& out) {
                if (*list) {
                    for (const auto& [k, v] : synth_defaults(*kind)) {
                        out << k << '=' << csv::format_exact(v) << '\n';
                    }
                    return;
                }
                ctx.seed_notice();
                SynthParams overrides;
                for (const auto& p : *params) {
                    const auto eq = p.find('=');
                    require(eq != std::string::npos, ErrorCode::InvalidArgument, "--param expects name=value");
                    double v = 0.0;
                    try {
                        std::size_t used = 0;
                        v = std::stod(p.substr(eq + 1), &used);
                        require(used == p.size() - eq - 1, ErrorCode::Parse, "bad number in --param " + p);
                    } catch (const std::logic_error&) {
                        throw Error(ErrorCode::Parse, "bad number in --param " + p);
                    }
                    overrides[p.substr(0, eq)] = v;
                }
                generate_synthetic(*kind, overrides, ctx.seed, out);
            };
        });
    }
}

}  // namespace

int dispatch(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err)
{
    Context ctx;
    ctx.err = &err;
    CLI::App app("Spin-mechanics simulation and analysis toolkit", "spinmech");
    build(app, ctx);

    std::vector<std::string> args = args_in;
    try {
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") {
                merge_config(app, args, args[i + 1]);
                break;
            }
            if (args[i].rfind("--config=", 0) == 0) {
                merge_config(app, args, args[i].substr(9));
                break;
            }
        }
    } catch (const Error& e) {
        err << "spinmech: " << e.what() << '\n';
        return exit_code_for(e.code());
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "spinmech: usage error: " << e.what() << '\n';
        return kUsage;
    }

    if (!ctx.action) {
        err << "spinmech: usage error: no command given\n";
        return kUsage;
    }
    try {
        require(ctx.digits >= 1 && ctx.digits <= 17, ErrorCode::InvalidArgument, "--digits must lie in [1, 17]");
        require(ctx.threads >= 1, ErrorCode::InvalidArgument, "--threads must be at least 1");
        std::ostringstream buffer;
        ctx.action(buffer);
        if (ctx.out_path.empty()) {
            out << buffer.str();
        } else {
            std::ofstream file(ctx.out_path, std::ios::binary);
            require(static_cast<bool>(file), ErrorCode::Io, "cannot write '" + ctx.out_path + "'");
            file << buffer.str();
            file.close();
            require(!file.fail(), ErrorCode::Io, "write to '" + ctx.out_path + "' failed");
        }
    } catch (const Error& e) {
        err << "spinmech: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "spinmech: internal error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}

}  // namespace spinmech::cli
