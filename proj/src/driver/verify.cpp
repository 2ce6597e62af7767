#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "bilevel/common/error.hpp"
#include "bilevel/common/matrix.hpp"
#include "bilevel/common/rng.hpp"
#include "bilevel/common/tolerances.hpp"
#include "bilevel/driver/driver.hpp"

namespace bilevel {
namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

void check_rows(const BilevelInstance& inst, const char* name, const Matrix& A, const Matrix& B,
                const std::vector<double>& h, std::span<const std::uint8_t> x, std::span<const double> y, double tol,
                VerifyReport& rep) {
    for (std::size_t i = 0; i < h.size(); ++i) {
        double lhs = 0.0;
        for (std::size_t k = 0; k < inst.n_x; ++k)
            if (x[k]) lhs += A(i, k);
        for (std::size_t j = 0; j < inst.n_y; ++j) lhs += B(i, j) * y[j];
        if (lhs > h[i] + tol::scaled(tol, h[i]))
            rep.failures.push_back(std::string(name) + " row " + std::to_string(i) + " violated: " + fmt(lhs) +
                                   " > " + fmt(h[i]));
    }
}

std::vector<BinaryVector> replay_points(const BilevelInstance& inst, const VerifyOptions& opts, PhiCache& cache) {
    std::vector<BinaryVector> pts;
    if (inst.n_x <= opts.enumerate_max) {
        for_each_vertex(inst.n_x, [&](const BinaryVector& x) {
            if (cache.phi(x)) pts.push_back(x);
        });
        return pts;
    }
    Rng rng(opts.seed, 0x7e51);
    // Draw until enough feasible tenders or the attempt budget runs out.
    for (std::size_t tries = 0; pts.size() < opts.samples && tries < 20 * opts.samples; ++tries) {
        BinaryVector x(inst.n_x);
        for (auto& b : x) b = rng.bernoulli(0.5) ? 1 : 0;
        if (cache.phi(x)) pts.push_back(std::move(x));
    }
    return pts;
}

}  // namespace

VerifyReport verify_solution(const BilevelInstance& inst, const BilevelSolution& sol, const VerifyOptions& opts) {
    PhiCache cache(inst);
    return verify_solution(inst, sol, opts, cache);
}

VerifyReport verify_solution(const BilevelInstance& inst, const BilevelSolution& sol, const VerifyOptions& opts,
                             PhiCache& cache) {
    VerifyReport rep;
    const double tol = opts.tol;
    if (sol.has_solution) {
        if (sol.x.size() != inst.n_x || sol.y.size() != inst.n_y) {
            rep.failures.push_back("solution vectors have the wrong length");
        } else {
            for (std::size_t j = 0; j < inst.n_y; ++j) {
                const double v = sol.y[j];
                if (v < inst.y_lower(j) - tol || v > inst.y_upper(j) + tol)
                    rep.failures.push_back("y[" + std::to_string(j) + "] = " + fmt(v) + " outside its bounds");
                if (inst.y_is_binary(j) && !tol::is_integral(v, tol))
                    rep.failures.push_back("y[" + std::to_string(j) + "] = " + fmt(v) + " is not binary");
            }
            check_rows(inst, "upper", inst.A_u, inst.B_u, inst.h_u, sol.x, sol.y, tol, rep);
            check_rows(inst, "lower", inst.A_l, inst.B_l, inst.h_l, sol.x, sol.y, tol, rep);
            rep.phi = cache.phi(sol.x);
            const double dly = lower_objective(inst, sol.y);
            if (!rep.phi) {
                rep.failures.push_back("follower infeasible at x = " + to_string(sol.x));
            } else if (dly < *rep.phi - tol) {
                rep.failures.push_back("follower not optimal: d_l'y = " + fmt(dly) + " < phi(x) = " + fmt(*rep.phi));
            }
            double obj = dot(inst.d_u, sol.y);
            for (std::size_t k = 0; k < inst.n_x; ++k)
                if (sol.x[k]) obj += inst.c_u[k];
            if (std::abs(obj - sol.objective) > tol::scaled(tol, obj))
                rep.failures.push_back("reported objective " + fmt(sol.objective) + " differs from " + fmt(obj));
            if (sol.gap < -Tolerances::equality) rep.failures.push_back("negative gap " + fmt(sol.gap));
        }
    }

    if (!sol.cuts.empty()) {
        const auto pts = replay_points(inst, opts, cache);
        rep.points_checked = pts.size();
        for (std::size_t c = 0; c < sol.cuts.size(); ++c) {
            const auto& rec = sol.cuts[c];
            ++rep.cuts_checked;
            if (rec.alpha.size() != inst.n_x) {
                rep.failures.push_back("cut " + std::to_string(c) + " has the wrong length");
                continue;
            }
            const Cut cut = rec.as_cut();
            for (const auto& x : pts) {
                const double phi = *cache.phi(x);
                const double rhs = cut.rhs(x);
                if (rhs > phi + tol::scaled(tol, phi)) {
                    rep.failures.push_back("cut " + std::to_string(c) + " (" + to_string(rec.family) +
                                           ", z=" + to_string(rec.z) + ") has rhs " + fmt(rhs) +
                                           " above phi " + fmt(phi) + " at x=" + to_string(x));
                    break;
                }
            }
        }
    }
    rep.ok = rep.failures.empty();
    return rep;
}

namespace {

nlohmann::json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

double num_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw SchemaError(key, "missing");
    const auto& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw SchemaError(key, "expected a number");
    return v.get<double>();
}

BinaryVector bits_from(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of 0/1");
    BinaryVector v;
    for (const auto& e : j) {
        if (!e.is_number_integer() || (e.get<int>() != 0 && e.get<int>() != 1))
            throw SchemaError(path, "expected an array of 0/1");
        v.push_back(static_cast<std::uint8_t>(e.get<int>()));
    }
    return v;
}

}  // namespace

nlohmann::json solution_to_json(const BilevelSolution& sol) {
    nlohmann::json j;
    j["status"] = to_string(sol.status);
    j["strategy"] = sol.strategy;
    j["objective"] = num(sol.objective);
    j["bound"] = num(sol.bound);
    j["gap"] = num(sol.gap);
    j["x"] = nlohmann::json::array();
    if (sol.has_solution)
        for (auto b : sol.x) j["x"].push_back(static_cast<int>(b));
    j["y"] = sol.has_solution ? nlohmann::json(sol.y) : nlohmann::json::array();
    j["cuts"] = nlohmann::json::array();
    for (const auto& c : sol.cuts) {
        nlohmann::json e;
        e["z"] = nlohmann::json::array();
        for (auto b : c.z) e["z"].push_back(static_cast<int>(b));
        e["family"] = to_string(c.family);
        e["alpha"] = c.alpha;
        e["beta"] = c.beta;
        e["violation"] = c.violation;
        e["provenance"] = c.provenance;
        j["cuts"].push_back(std::move(e));
    }
    j["phi_solves"] = sol.phi_solves;
    j["varphi_solves"] = sol.varphi_solves;
    j["callback_rounds"] = sol.callback_rounds;
    j["nodes"] = sol.nodes;
    j["coeff_ms"] = sol.coeff_ms;
    j["solve_ms"] = sol.solve_ms;
    j["wall_ms"] = sol.wall_ms;
    if (sol.learned_valid) j["learned_valid"] = *sol.learned_valid;
    return j;
}

BilevelSolution solution_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("$", "expected an object");
    BilevelSolution s;
    const std::string status = j.value("status", "optimal");
    if (status == "optimal") s.status = BilevelStatus::Optimal;
    else if (status == "infeasible") s.status = BilevelStatus::Infeasible;
    else if (status == "limit") s.status = BilevelStatus::Limit;
    else throw SchemaError("status", "unknown value '" + status + "'");
    s.strategy = j.value("strategy", "");
    s.objective = num_from(j, "objective");
    s.bound = num_from(j, "bound");
    s.gap = num_from(j, "gap");
    if (!j.contains("x")) throw SchemaError("x", "missing");
    s.x = bits_from(j.at("x"), "x");
    if (!j.contains("y") || !j.at("y").is_array()) throw SchemaError("y", "expected an array");
    for (const auto& e : j.at("y")) {
        if (!e.is_number()) throw SchemaError("y", "expected numbers");
        s.y.push_back(e.get<double>());
    }
    s.has_solution = !s.x.empty() && std::isfinite(s.objective);
    if (j.contains("cuts")) {
        std::size_t i = 0;
        for (const auto& e : j.at("cuts")) {
            const std::string p = "cuts[" + std::to_string(i++) + "]";
            CutRecord c;
            if (!e.contains("z") || !e.contains("family") || !e.contains("alpha") || !e.contains("beta"))
                throw SchemaError(p, "needs z, family, alpha and beta");
            c.z = bits_from(e.at("z"), p + ".z");
            try {
                c.family = cut_family_from_string(e.at("family").get<std::string>());
            } catch (const std::exception&) {
                throw SchemaError(p + ".family", "unknown cut family");
            }
            if (!e.at("alpha").is_array()) throw SchemaError(p + ".alpha", "expected an array");
            for (const auto& a : e.at("alpha")) c.alpha.push_back(a.get<double>());
            c.beta = e.at("beta").get<double>();
            c.violation = e.value("violation", 0.0);
            c.provenance = e.value("provenance", "");
            s.cuts.push_back(std::move(c));
        }
    }
    s.phi_solves = j.value("phi_solves", std::size_t{0});
    s.varphi_solves = j.value("varphi_solves", std::size_t{0});
    s.callback_rounds = j.value("callback_rounds", std::size_t{0});
    s.nodes = j.value("nodes", std::size_t{0});
    s.coeff_ms = j.value("coeff_ms", 0.0);
    s.solve_ms = j.value("solve_ms", 0.0);
    s.wall_ms = j.value("wall_ms", 0.0);
    if (j.contains("learned_valid")) s.learned_valid = j.at("learned_valid").get<bool>();
    return s;
}

void save_solution(const BilevelSolution& sol, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << solution_to_json(sol).dump(2) << '\n';
}

BilevelSolution load_solution(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", e.what());
    }
    return solution_from_json(j);
}

}  // namespace bilevel
