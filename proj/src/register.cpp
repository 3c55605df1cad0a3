#include "spinmech/register.hpp"

#include "spinmech/parallel.hpp"

#include <json.hpp>

#include <cmath>

namespace spinmech {

RegisterState RegisterState::basis(int electron, int nuclear)
{
    RegisterState s;
    s.amplitudes[static_cast<Eigen::Index>(index(electron, nuclear))] = 1.0;
    return s;
}

double RegisterState::nuclear_contrast() const
{
    const double up = std::norm(amplitudes[1]) + std::norm(amplitudes[3]);
    const double down = std::norm(amplitudes[0]) + std::norm(amplitudes[2]);
    return up - down;
}

void apply_nuclear_rotation(RegisterState& s, double angle, double axis_phase)
{
    const Complex c(std::cos(0.5 * angle), 0.0);
    const Complex mi_sin(0.0, -std::sin(0.5 * angle));
    const Complex off_up = mi_sin * std::polar(1.0, axis_phase);     // ⟨↑|R|↓⟩
    const Complex off_down = mi_sin * std::polar(1.0, -axis_phase);  // ⟨↓|R|↑⟩
    for (int e = 0; e < 2; ++e) {
        const auto i_down = static_cast<Eigen::Index>(RegisterState::index(e, 0));
        const auto i_up = static_cast<Eigen::Index>(RegisterState::index(e, 1));
        const Complex down = s.amplitudes[i_down];
        const Complex up = s.amplitudes[i_up];
        s.amplitudes[i_down] = c * down + off_down * up;
        s.amplitudes[i_up] = off_up * down + c * up;
    }
}

void apply_cnot(RegisterState& s)
{
    std::swap(s.amplitudes[1], s.amplitudes[3]);
}

void apply_electron_phase(RegisterState& s, double phase)
{
    const Complex f = std::polar(1.0, -phase);
    s.amplitudes[2] *= f;
    s.amplitudes[3] *= f;
}

void apply_nuclear_phase(RegisterState& s, double phase)
{
    const Complex f = std::polar(1.0, -phase);
    s.amplitudes[1] *= f;
    s.amplitudes[3] *= f;
}

std::vector<DetuningBranch> SequenceConfig::effective_branches() const
{
    if (!branches.empty()) {
        return branches;
    }
    return {{f_acc, 0.5}, {-f_acc, 0.5}};
}

void SequenceConfig::validate() const
{
    require(nuclear_polarization >= 0.0 && nuclear_polarization <= 1.0, ErrorCode::InvalidProbability,
            "nuclear polarization must lie in [0, 1]");
    double total = 0.0;
    for (const auto& b : branches) {
        require(b.probability >= 0.0 && b.probability <= 1.0, ErrorCode::InvalidProbability,
                "branch probability must lie in [0, 1]");
        require(std::isfinite(b.detuning_hz), ErrorCode::InvalidArgument, "branch detuning must be finite");
        total += b.probability;
    }
    require(branches.empty() || std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidProbability,
            "branch probabilities must sum to 1");
    require(t_move > 0.0, ErrorCode::InvalidArgument, "movement time must be positive");
    require(t_pi >= 0.0 && t_pi <= t_move, ErrorCode::OutOfRange, "π-pulse time must lie within the move");
    require(std::isfinite(tau) && std::isfinite(theta) && std::isfinite(f_acc), ErrorCode::InvalidArgument,
            "sequence parameters must be finite");
}

std::optional<std::string> timing_warning(const SequenceConfig& cfg)
{
    if (2.0 * cfg.nuclear_pi_duration > 0.05 * cfg.t_move) {
        return "nuclear π pulses take " + std::to_string(2.0 * cfg.nuclear_pi_duration / cfg.t_move * 100.0) +
               "% of the move; instantaneous-gate model is optimistic";
    }
    return std::nullopt;
}

RegisterState run_register_sequence(int nuclear_start, double branch_detuning_hz, double tau, double theta,
                                    double phase_before, double phase_after)
{
    RegisterState s = RegisterState::basis(1, nuclear_start);
    apply_nuclear_rotation(s, 0.5 * kPi, 0.0);
    apply_cnot(s);
    apply_electron_phase(s, kTwoPi * branch_detuning_hz * tau);
    apply_cnot(s);
    apply_nuclear_phase(s, phase_before);
    apply_nuclear_rotation(s, kPi, 0.5 * kPi);
    apply_nuclear_phase(s, phase_after);
    apply_nuclear_rotation(s, 0.5 * kPi, -theta);
    return s;
}

namespace {

struct TransportPhases {
    double before = 0.0;
    double after = 0.0;
};

TransportPhases transport_phases(const PhaseIntegrator& integ, double t_pi)
{
    const double first = integ.integral(t_pi);
    return {kTwoPi * first, kTwoPi * (integ.total() - first)};
}

double mixture_contrast(const SequenceConfig& cfg, const std::vector<DetuningBranch>& branches,
                        const TransportPhases& ph)
{
    const double p = cfg.nuclear_polarization;
    double contrast = 0.0;
    for (const auto& b : branches) {
        for (int n0 = 0; n0 < 2; ++n0) {
            const double weight = b.probability * (n0 == 0 ? p : 1.0 - p);
            if (weight == 0.0) {
                continue;
            }
            const RegisterState s = run_register_sequence(n0, b.detuning_hz, cfg.tau, cfg.theta, ph.before, ph.after);
            contrast += weight * s.nuclear_contrast();
        }
    }
    return contrast;
}

}  // namespace

SequenceResult simulate_memory_sequence(const SequenceConfig& cfg, const DetuningProfile& profile)
{
    cfg.validate();
    const PhaseIntegrator integ(profile);
    require(cfg.t_pi <= profile.t_move(), ErrorCode::OutOfRange, "π-pulse time lies beyond the profile");
    const TransportPhases ph = transport_phases(integ, cfg.t_pi);
    SequenceResult r;
    r.contrast = mixture_contrast(cfg, cfg.effective_branches(), ph);
    r.residual_phase = ph.before - ph.after;
    return r;
}

std::vector<double> ramsey_vs_tau(const SequenceConfig& cfg, const DetuningProfile& profile,
                                  const std::vector<double>& tau_grid, unsigned threads)
{
    cfg.validate();
    const PhaseIntegrator integ(profile);
    require(cfg.t_pi <= profile.t_move(), ErrorCode::OutOfRange, "π-pulse time lies beyond the profile");
    const TransportPhases ph = transport_phases(integ, cfg.t_pi);
    const auto branches = cfg.effective_branches();
    std::vector<double> out(tau_grid.size());
    parallel_for(tau_grid.size(), threads, [&](std::size_t i) {
        SequenceConfig c = cfg;
        c.tau = tau_grid[i];
        out[i] = mixture_contrast(c, branches, ph);
    });
    return out;
}

std::vector<double> theta_scan(const SequenceConfig& cfg, const DetuningProfile& profile,
                               const std::vector<double>& theta_grid, unsigned threads)
{
    cfg.validate();
    const PhaseIntegrator integ(profile);
    require(cfg.t_pi <= profile.t_move(), ErrorCode::OutOfRange, "π-pulse time lies beyond the profile");
    const TransportPhases ph = transport_phases(integ, cfg.t_pi);
    const auto branches = cfg.effective_branches();
    std::vector<double> out(theta_grid.size());
    parallel_for(theta_grid.size(), threads, [&](std::size_t i) {
        SequenceConfig c = cfg;
        c.theta = theta_grid[i];
        out[i] = mixture_contrast(c, branches, ph);
    });
    return out;
}

SequenceConfig sequence_config_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("sequence config: ") + e.what());
    }
    require(j.is_object(), ErrorCode::Parse, "sequence config must be a JSON object");
    SequenceConfig cfg;
    try {
        cfg.tau = j.value("tau_s", cfg.tau);
        cfg.theta = j.value("theta_rad", cfg.theta);
        cfg.f_acc = j.value("f_acc_hz", cfg.f_acc);
        cfg.nuclear_polarization = j.value("nuclear_polarization", cfg.nuclear_polarization);
        cfg.t_pi = j.value("t_pi_s", cfg.t_pi);
        cfg.t_move = j.value("t_move_s", cfg.t_move);
        cfg.nuclear_pi_duration = j.value("nuclear_pi_duration_s", cfg.nuclear_pi_duration);
        if (j.contains("branches")) {
            for (const auto& b : j.at("branches")) {
                cfg.branches.push_back({b.at("detuning_hz").get<double>(), b.at("probability").get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("sequence config: ") + e.what());
    }
    return cfg;
}

std::string sequence_config_to_json(const SequenceConfig& cfg)
{
    nlohmann::json j;
    j["tau_s"] = cfg.tau;
    j["theta_rad"] = cfg.theta;
    j["f_acc_hz"] = cfg.f_acc;
    j["nuclear_polarization"] = cfg.nuclear_polarization;
    j["t_pi_s"] = cfg.t_pi;
    j["t_move_s"] = cfg.t_move;
    j["nuclear_pi_duration_s"] = cfg.nuclear_pi_duration;
    auto& arr = j["branches"] = nlohmann::json::array();
    for (const auto& b : cfg.effective_branches()) {
        arr.push_back({{"detuning_hz", b.detuning_hz}, {"probability", b.probability}});
    }
    return j.dump(2);
}

}  // namespace spinmech
