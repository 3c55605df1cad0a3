#pragma once

// Spin-mechanical cooperativity C = (λ/2π)²·T2 / (n_th·κ/2π). All rates are
// ordinary frequencies and the spin dephasing rate is 1/T2.

#include "spinmech/common.hpp"
#include "spinmech/csv.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spinmech {

struct CoopInputs {
    std::string label;
    double lambda_over_2pi = 0.0;   ///< Hz
    double t2 = 0.0;                ///< s
    double n_kappa_over_2pi = 0.0;  ///< Hz

    void validate() const;
};

double cooperativity(const CoopInputs& in);

/// n_th(T, f_r)·f_r/Q, Hz.
double n_kappa(double temperature, double f_r, double q_factor);

/// λ comes from λ/2π directly when lambda_over_2pi > 0, else γe·z_p·G with
/// z_p taken from the field or from (m_eff, f_r) when z_p is 0.
struct Scenario {
    double gradient = 0.0;          ///< T/m
    double lambda_over_2pi = 0.0;   ///< Hz, optional
    double z_p = 0.0;               ///< m, optional
    double m_eff = constants::default_m_eff;
    double f_r = 1.4e6;
    double q_factor = 1e9;
    double temperature = 4.0;
    double t2 = 1e-2;

    void validate() const;
};

struct Projection {
    double lambda_over_2pi = 0.0;
    double n_kappa_over_2pi = 0.0;
    double cooperativity = 0.0;
    double z_p = 0.0;
};

Projection project_scenario(const Scenario& s, double gamma_e = constants::gamma_e);

struct CoopRow {
    CoopInputs inputs;
    double cooperativity = 0.0;
};

std::vector<CoopRow> table(const std::vector<CoopInputs>& rows);

// Rows CSV `label,lambda_over_2pi_hz,t2_s,n_kappa_over_2pi_hz`; output adds `cooperativity`.
std::vector<CoopInputs> coop_rows_from_csv(const csv::Table& t);
void write_coop_table(std::ostream& out, const std::vector<CoopRow>& rows);
std::string coop_table_json(const std::vector<CoopRow>& rows);

}  // namespace spinmech
