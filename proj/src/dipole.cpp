#include "spinmech/dipole.hpp"

#include "spinmech/least_squares.hpp"
#include "spinmech/parallel.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinmech {

NvAxis::NvAxis(const Vec3& direction)
{
    const double n = direction.norm();
    require(n > 0.0 && std::isfinite(n), ErrorCode::InvalidArgument, "NV axis must be a non-zero vector");
    axis_ = direction / n;
}

namespace {

Vec3 separation(const Dipole& d, const Vec3& point)
{
    const Vec3 r = point - d.position;
    require(r.squaredNorm() > 0.0, ErrorCode::SingularPoint, "field evaluated at the dipole position");
    return r;
}

}  // namespace

Vec3 dipole_field(const Dipole& d, const Vec3& point)
{
    const Vec3 r = separation(d, point);
    const double r2 = r.squaredNorm();
    const double inv_r = 1.0 / std::sqrt(r2);
    const double inv_r3 = inv_r / r2;
    const double inv_r5 = inv_r3 / r2;
    return constants::mu0_over_4pi * (3.0 * d.moment.dot(r) * inv_r5 * r - d.moment * inv_r3);
}

Mat3 dipole_field_jacobian(const Dipole& d, const Vec3& point)
{
    const Vec3 r = separation(d, point);
    const double r2 = r.squaredNorm();
    const double inv_r5 = 1.0 / (r2 * r2 * std::sqrt(r2));
    const double mr = d.moment.dot(r);
    Mat3 j = r * d.moment.transpose() + d.moment * r.transpose() - (5.0 * mr / r2) * (r * r.transpose());
    j.diagonal().array() += mr;
    return (3.0 * constants::mu0_over_4pi * inv_r5) * j;
}

double axial_field(const Dipole& d, const Vec3& point, const NvAxis& nv)
{
    return nv.axis().dot(dipole_field(d, point));
}

double axial_gradient(const Dipole& d, const Vec3& point, const NvAxis& nv, const Vec3& motion_axis)
{
    const double n = motion_axis.norm();
    require(n > 0.0, ErrorCode::InvalidArgument, "motion axis must be non-zero");
    return nv.axis().dot(dipole_field_jacobian(d, point) * (motion_axis / n));
}

Eigen::Matrix<double, 1, 6> axial_field_parameter_gradient(const Dipole& d, const Vec3& point, const NvAxis& nv)
{
    const Vec3 r = separation(d, point);
    const double r2 = r.squaredNorm();
    const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
    const Vec3& n = nv.axis();
    const Vec3 d_moment = constants::mu0_over_4pi * (3.0 * n.dot(r) * inv_r3 / r2 * r - n * inv_r3);
    const Vec3 d_position = -(dipole_field_jacobian(d, point).transpose() * n);
    Eigen::Matrix<double, 1, 6> g;
    g << d_moment.transpose(), d_position.transpose();
    return g;
}

FieldMap synthesize_axial_map(const Dipole& d, const GridGeometry& geometry, double scan_height, const NvAxis& nv)
{
    FieldMap map(geometry, 0.0);
    for (std::size_t i = 0; i < map.size(); ++i) {
        map.values[i] = axial_field(d, geometry.point(i, scan_height), nv);
    }
    return map;
}

namespace {

struct Samples {
    std::vector<Vec3> points;
    Eigen::VectorXd values;
};

Samples valid_samples(const FieldMap& map, double scan_height)
{
    Samples s;
    std::vector<double> v;
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map.valid[i]) {
            s.points.push_back(map.geometry.point(i, scan_height));
            v.push_back(map.values[i]);
        }
    }
    s.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return s;
}

Eigen::Matrix<double, 6, 1> pack(const Dipole& d)
{
    Eigen::Matrix<double, 6, 1> p;
    p << d.moment, d.position;
    return p;
}

Dipole unpack(const Eigen::VectorXd& p)
{
    return {p.head<3>(), p.tail<3>()};
}

}  // namespace

Dipole grid_search_seed(const FieldMap& map, const NvAxis& nv, double scan_height)
{
    const Samples s = valid_samples(map, scan_height);
    const auto& g = map.geometry;
    const double lx = g.pitch_x * static_cast<double>(g.nx - 1);
    const double ly = g.pitch_y * static_cast<double>(g.ny - 1);
    const double xc = g.x0 + 0.5 * lx;
    const double yc = g.y0 + 0.5 * ly;
    const double depth = 0.25 * std::max(lx, ly);

    Dipole best;
    double best_cost = std::numeric_limits<double>::infinity();
    const Eigen::Index n = s.values.size();
    for (double fz : {0.5, 1.0, 2.0}) {
        for (int iy = -1; iy <= 1; ++iy) {
            for (int ix = -1; ix <= 1; ++ix) {
                const Vec3 pos(xc + 0.25 * lx * ix, yc + 0.25 * ly * iy, scan_height - fz * depth);
                // The axial field is linear in the moment: solve for it directly.
                Eigen::MatrixXd a(n, 3);
                bool singular = false;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Vec3 r = s.points[static_cast<std::size_t>(k)] - pos;
                    const double r2 = r.squaredNorm();
                    if (r2 == 0.0) {
                        singular = true;
                        break;
                    }
                    const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
                    const Vec3& nv_axis = nv.axis();
                    a.row(k) = (constants::mu0_over_4pi *
                                (3.0 * nv_axis.dot(r) * inv_r3 / r2 * r - nv_axis * inv_r3))
                                   .transpose();
                }
                if (singular) {
                    continue;
                }
                const Vec3 m = a.colPivHouseholderQr().solve(s.values);
                const double cost = (a * m - s.values).squaredNorm();
                if (std::isfinite(cost) && cost < best_cost) {
                    best_cost = cost;
                    best = {m, pos};
                }
            }
        }
    }
    return best;
}

DipoleFit fit_dipole(const FieldMap& map, const NvAxis& nv, double scan_height, const std::optional<Dipole>& init,
                     const DipoleFitOptions& options)
{
    const Samples s = valid_samples(map, scan_height);
    const Eigen::Index n = s.values.size();
    require(n >= 6, ErrorCode::Underdetermined, "dipole fit needs at least 6 valid pixels, got " + std::to_string(n));

    const double lo = s.values.minCoeff();
    const double hi = s.values.maxCoeff();
    const double scale = s.values.cwiseAbs().maxCoeff();
    require(hi - lo > 1e-12 * scale && hi > lo, ErrorCode::DegenerateMap, "map has no field structure");

    const Dipole seed = init ? *init : grid_search_seed(map, nv, scan_height);
    require(seed.moment.norm() > 0.0, ErrorCode::DegenerateMap, "initial moment is zero");

    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const Dipole d = unpack(p);
        r.resize(n);
        if (jac) {
            jac->resize(n, 6);
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            const Vec3& pt = s.points[static_cast<std::size_t>(k)];
            if ((pt - d.position).squaredNorm() == 0.0) {
                r.setConstant(std::numeric_limits<double>::infinity());
                return;
            }
            r[k] = axial_field(d, pt, nv) - s.values[k];
            if (jac) {
                jac->row(k) = axial_field_parameter_gradient(d, pt, nv);
            }
        }
    };

    LmOptions lm;
    lm.max_iterations = options.max_iterations;
    const LmResult res = levenberg_marquardt(residuals, pack(seed), lm);

    require(!res.rank_deficient, ErrorCode::DegenerateMap, "fit Jacobian is rank deficient");
    require(res.converged, ErrorCode::NoConvergence,
            "dipole fit did not converge in " + std::to_string(options.max_iterations) + " iterations");

    DipoleFit fit;
    fit.dipole = unpack(res.params);
    fit.report.iterations = res.iterations;
    fit.report.converged = res.converged;
    fit.report.rms_residual = std::sqrt(res.cost / static_cast<double>(n));
    fit.report.max_residual = res.residuals.cwiseAbs().maxCoeff();
    fit.report.covariance = res.covariance;
    return fit;
}

GradientMap gradient_map(const Dipole& d, const GridGeometry& geometry, double scan_height, const NvAxis& nv,
                         const Vec3& motion_axis, unsigned threads)
{
    GradientMap out;
    out.map = FieldMap(geometry, 0.0);
    parallel_for(geometry.size(), threads, [&](std::size_t i) {
        out.map.values[i] = axial_gradient(d, geometry.point(i, scan_height), nv, motion_axis);
    });
    for (double v : out.map.values) {
        out.max_abs_gradient = std::max(out.max_abs_gradient, std::abs(v));
    }
    return out;
}

std::string dipole_to_json(const Dipole& d)
{
    nlohmann::json j;
    j["moment_am2"] = {d.moment.x(), d.moment.y(), d.moment.z()};
    j["position_m"] = {d.position.x(), d.position.y(), d.position.z()};
    return j.dump();
}

Dipole dipole_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        const auto m = j.at("moment_am2").get<std::vector<double>>();
        const auto p = j.at("position_m").get<std::vector<double>>();
        require(m.size() == 3 && p.size() == 3, ErrorCode::Parse, "dipole vectors must have 3 components");
        return {Vec3(m[0], m[1], m[2]), Vec3(p[0], p[1], p[2])};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("dipole JSON: ") + e.what());
    }
}

}  // namespace spinmech
