#include "spinmech/coop.hpp"

#include "spinmech/mech.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>

namespace spinmech {

void CoopInputs::validate() const
{
    require(lambda_over_2pi > 0.0 && t2 > 0.0 && n_kappa_over_2pi > 0.0, ErrorCode::InvalidArgument,
            "cooperativity inputs must be positive" + (label.empty() ? std::string() : " (" + label + ")"));
}

double cooperativity(const CoopInputs& in)
{
    in.validate();
    return in.lambda_over_2pi * in.lambda_over_2pi * in.t2 / in.n_kappa_over_2pi;
}

double n_kappa(double temperature, double f_r, double q_factor)
{
    require(f_r > 0.0 && q_factor > 0.0, ErrorCode::InvalidArgument, "frequency and Q must be positive");
    return thermal_occupation(temperature, f_r) * f_r / q_factor;
}

void Scenario::validate() const
{
    require(gradient >= 0.0 && lambda_over_2pi >= 0.0 && z_p >= 0.0, ErrorCode::InvalidArgument,
            "gradient, λ and z_p must be non-negative");
    require(m_eff > 0.0 && f_r > 0.0 && q_factor > 0.0 && temperature > 0.0 && t2 > 0.0,
            ErrorCode::InvalidArgument, "m_eff, f_r, Q, temperature and T2 must be positive");
}

Projection project_scenario(const Scenario& s, double gamma_e)
{
    s.validate();
    Projection p;
    p.z_p = s.z_p > 0.0 ? s.z_p : zero_point_motion(s.m_eff, s.f_r);
    p.lambda_over_2pi = s.lambda_over_2pi > 0.0 ? s.lambda_over_2pi : gamma_e * p.z_p * s.gradient;
    p.n_kappa_over_2pi = n_kappa(s.temperature, s.f_r, s.q_factor);
    p.cooperativity = p.lambda_over_2pi * p.lambda_over_2pi * s.t2 / p.n_kappa_over_2pi;
    return p;
}

std::vector<CoopRow> table(const std::vector<CoopInputs>& rows)
{
    std::vector<CoopRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back({r, cooperativity(r)});
    }
    return out;
}

std::vector<CoopInputs> coop_rows_from_csv(const csv::Table& t)
{
    const std::size_t c_label = t.column("label");
    const std::size_t c_lambda = t.column("lambda_over_2pi_hz");
    const std::size_t c_t2 = t.column("t2_s");
    const std::size_t c_nk = t.column("n_kappa_over_2pi_hz");
    std::vector<CoopInputs> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        rows.push_back({t.rows[i][c_label], t.number(i, c_lambda), t.number(i, c_t2), t.number(i, c_nk)});
    }
    return rows;
}

void write_coop_table(std::ostream& out, const std::vector<CoopRow>& rows)
{
    out << "label,lambda_over_2pi_hz,t2_s,n_kappa_over_2pi_hz,cooperativity\n";
    for (const auto& r : rows) {
        out << r.inputs.label << ',' << csv::format_exact(r.inputs.lambda_over_2pi) << ','
            << csv::format_exact(r.inputs.t2) << ',' << csv::format_exact(r.inputs.n_kappa_over_2pi) << ','
            << csv::format_exact(r.cooperativity) << '\n';
    }
}

std::string coop_table_json(const std::vector<CoopRow>& rows)
{
    auto j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"label", r.inputs.label},
                     {"lambda_over_2pi_hz", r.inputs.lambda_over_2pi},
                     {"t2_s", r.inputs.t2},
                     {"n_kappa_over_2pi_hz", r.inputs.n_kappa_over_2pi},
                     {"cooperativity", r.cooperativity}});
    }
    return j.dump(2);
}

}  // namespace spinmech
