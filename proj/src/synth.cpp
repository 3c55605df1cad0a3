#include "spinmech/synth.hpp"

#include "spinmech/dipole.hpp"
#include "spinmech/field_map.hpp"
#include "spinmech/random.hpp"
#include "spinmech/spinmodel.hpp"
#include "spinmech/transport.hpp"

#include <cmath>
#include <ostream>

namespace spinmech {

namespace {

const SynthParams kMapDefaults = {
    {"nx", 21},           {"ny", 21},          {"x0_um", -2.5},     {"y0_um", -2.5},    {"pitch_um", 0.25},
    {"scan_height_um", 1.0},                   {"dipole_x_um", 0.1}, {"dipole_y_um", -0.2}, {"dipole_z_um", 0.0},
    {"m_x_am2", 2e-15},   {"m_y_am2", -1e-15}, {"m_z_am2", 1e-14},  {"nv_x", 0.0},      {"nv_y", 0.0},
    {"nv_z", 1.0},
};

SynthParams with_defaults(const std::string& kind, const SynthParams& overrides)
{
    SynthParams p = synth_defaults(kind);
    for (const auto& [k, v] : overrides) {
        require(p.count(k) > 0, ErrorCode::InvalidArgument, "unknown parameter '" + k + "' for synth " + kind);
        p[k] = v;
    }
    return p;
}

std::size_t count(const SynthParams& p, const std::string& key)
{
    const double v = p.at(key);
    require(v >= 1.0 && v == std::floor(v), ErrorCode::InvalidArgument, key + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

GridGeometry map_geometry(const SynthParams& p)
{
    GridGeometry g;
    g.nx = count(p, "nx");
    g.ny = count(p, "ny");
    g.x0 = p.at("x0_um") * 1e-6;
    g.y0 = p.at("y0_um") * 1e-6;
    g.pitch_x = p.at("pitch_um") * 1e-6;
    g.pitch_y = g.pitch_x;
    g.validate();
    return g;
}

Dipole map_dipole(const SynthParams& p)
{
    Dipole d;
    d.moment = {p.at("m_x_am2"), p.at("m_y_am2"), p.at("m_z_am2")};
    d.position = Vec3(p.at("dipole_x_um"), p.at("dipole_y_um"), p.at("dipole_z_um")) * 1e-6;
    return d;
}

NvAxis map_axis(const SynthParams& p)
{
    return NvAxis(Vec3(p.at("nv_x"), p.at("nv_y"), p.at("nv_z")));
}

void write_series(std::ostream& out, const std::string& x, const std::string& y, const std::vector<double>& xs,
                  const std::vector<double>& ys)
{
    out << x << ',' << y << '\n';
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out << csv::format_exact(xs[i]) << ',' << csv::format_exact(ys[i]) << '\n';
    }
}

}  // namespace

std::vector<std::string> synth_kinds()
{
    return {"dipole-map", "esr-map", "psd", "ringdown", "echo", "profile"};
}

SynthParams synth_defaults(const std::string& kind)
{
    if (kind == "dipole-map") {
        SynthParams p = kMapDefaults;
        p["noise_tesla"] = 0.0;
        return p;
    }
    if (kind == "esr-map") {
        SynthParams p = kMapDefaults;
        p["noise_hz"] = 0.0;
        p["zero_field_splitting_hz"] = constants::zero_field_splitting;
        p["gamma_e_hz_per_tesla"] = constants::gamma_e;
        return p;
    }
    if (kind == "psd") {
        return {{"f_r_hz", 1.4e6}, {"kappa_over_2pi_hz", 1.5}, {"delta_x_m", 1.86e-9}, {"span_hz", 1000.0},
                {"n", 20001},      {"offset_m2_per_hz", 0.0},  {"noise_rel", 0.0}};
    }
    if (kind == "ringdown") {
        return {{"f_r_hz", 1.4e6}, {"q_factor", 8.25e5}, {"a0_m", 1e-9}, {"duration_s", 0.5}, {"n", 200},
                {"noise_rel", 0.0}};
    }
    if (kind == "echo") {
        return {{"lambda_over_2pi_hz", 7.7}, {"delta_x_m", 1.86e-9}, {"f_r_hz", 1.4e6}, {"z_p_m", 1.146e-14},
                {"n", 50},                   {"tau_max_s", 2.0 / 1.4e6}, {"noise", 0.01}};
    }
    if (kind == "profile") {
        return {{"peak_hz", 9.8e6}, {"t_move_s", 1.7e-3}, {"n", 1701}, {"skew", 0.0}};
    }
    throw Error(ErrorCode::UnknownKind, "unknown synth kind '" + kind + "'");
}

EchoCurve synth_echo_curve(double lambda_over_2pi, double delta_x, double f_r, double z_p, std::size_t n,
                           double tau_max, double noise, std::uint64_t seed)
{
    require(n >= 1 && tau_max > 0.0 && noise >= 0.0, ErrorCode::InvalidArgument, "bad echo fixture parameters");
    const Coupling c = Coupling::from_hz(lambda_over_2pi, z_p, f_r);
    RandomStream rng(seed, 0);
    EchoCurve curve;
    for (std::size_t k = 1; k <= n; ++k) {
        const double tau = tau_max * static_cast<double>(k) / static_cast<double>(n);
        curve.tau.push_back(tau);
        curve.contrast.push_back(thermal_contrast(c, delta_x, tau) + noise * rng.normal());
    }
    return curve;
}

TimeSeries synth_psd(double f_r, double kappa_over_2pi, double delta_x, double span, std::size_t n, double offset,
                     double noise_rel, std::uint64_t seed)
{
    require(n >= 2 && span > 0.0 && kappa_over_2pi > 0.0, ErrorCode::InvalidArgument, "bad PSD fixture parameters");
    RandomStream rng(seed, 0);
    TimeSeries s;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = f_r - 0.5 * span + span * static_cast<double>(i) / static_cast<double>(n - 1);
        const double clean = lorentzian(f, f_r, kappa_over_2pi, delta_x * delta_x, offset);
        s.t.push_back(f);
        s.value.push_back(clean * (1.0 + noise_rel * rng.normal()));
    }
    return s;
}

TimeSeries synth_ringdown(double f_r, double q_factor, double a0, double duration, std::size_t n, double noise_rel,
                          std::uint64_t seed)
{
    require(n >= 2 && duration > 0.0 && q_factor > 0.0, ErrorCode::InvalidArgument, "bad ringdown fixture parameters");
    RandomStream rng(seed, 0);
    const double rate = kTwoPi * f_r / (2.0 * q_factor);
    TimeSeries s;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = duration * static_cast<double>(i) / static_cast<double>(n - 1);
        s.t.push_back(t);
        s.value.push_back(a0 * std::exp(-rate * t) * (1.0 + noise_rel * rng.normal()));
    }
    return s;
}

void generate_synthetic(const std::string& kind, const SynthParams& overrides, std::uint64_t seed, std::ostream& out)
{
    const SynthParams p = with_defaults(kind, overrides);
    if (kind == "dipole-map") {
        const auto g = map_geometry(p);
        FieldMap map = synthesize_axial_map(map_dipole(p), g, p.at("scan_height_um") * 1e-6, map_axis(p));
        RandomStream rng(seed, 0);
        for (auto& v : map.values) {
            v += p.at("noise_tesla") * rng.normal();
        }
        write_field_map(out, map);
    } else if (kind == "esr-map") {
        const auto g = map_geometry(p);
        const Dipole d = map_dipole(p);
        const NvAxis nv = map_axis(p);
        const SpinParams sp{p.at("zero_field_splitting_hz"), p.at("gamma_e_hz_per_tesla")};
        const double z = p.at("scan_height_um") * 1e-6;
        RandomStream rng(seed, 0);
        EsrMap map(g, EsrPair{});
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Vec3 b = dipole_field(d, g.point(i, z));
            const double bz = b.dot(nv.axis());
            const double bx = (b - bz * nv.axis()).norm();
            EsrPair e = esr_frequencies(sp, {bz, bx});
            e.f_minus += p.at("noise_hz") * rng.normal();
            e.f_plus += p.at("noise_hz") * rng.normal();
            map.values[i] = e;
        }
        write_esr_map(out, map);
    } else if (kind == "psd") {
        const auto s = synth_psd(p.at("f_r_hz"), p.at("kappa_over_2pi_hz"), p.at("delta_x_m"), p.at("span_hz"),
                                 count(p, "n"), p.at("offset_m2_per_hz"), p.at("noise_rel"), seed);
        write_series(out, "freq_hz", "psd_m2_per_hz", s.t, s.value);
    } else if (kind == "ringdown") {
        const auto s = synth_ringdown(p.at("f_r_hz"), p.at("q_factor"), p.at("a0_m"), p.at("duration_s"),
                                      count(p, "n"), p.at("noise_rel"), seed);
        write_series(out, "t_s", "amplitude_m", s.t, s.value);
    } else if (kind == "echo") {
        const auto c = synth_echo_curve(p.at("lambda_over_2pi_hz"), p.at("delta_x_m"), p.at("f_r_hz"),
                                        p.at("z_p_m"), count(p, "n"), p.at("tau_max_s"), p.at("noise"), seed);
        write_series(out, "tau_s", "contrast", c.tau, c.contrast);
    } else if (kind == "profile") {
        DetuningProfile prof = sinusoidal_profile(p.at("peak_hz"), p.at("t_move_s"), count(p, "n"));
        const double skew = p.at("skew");
        for (std::size_t i = 0; i < prof.size(); ++i) {
            prof.delta_e[i] *= 1.0 + skew * prof.t[i] / prof.t_move();
        }
        write_profile(out, prof);
    }
}

}  // namespace spinmech
