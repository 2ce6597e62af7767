#include "bilevel/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bilevel/common/error.hpp"
#include "bilevel/instances/generators.hpp"
#include "bilevel/model/instance_io.hpp"

namespace fs = std::filesystem;

namespace bilevel::cli {
namespace {

std::string num(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

void append_csv(const std::string& path, const char* header, const std::vector<std::string>& rows) {
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream f(path, std::ios::app);
    if (!f) throw Error("cannot write " + path);
    if (fresh) f << header << '\n';
    for (const auto& r : rows) f << r << '\n';
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string result_path_for(const RunManifest& m, const std::string& instance) {
    if (m.result_path.empty()) return {};
    std::string p = m.result_path;
    if (auto k = p.find("{stem}"); k != std::string::npos) p.replace(k, 6, stem(instance));
    return p;
}

}  // namespace

std::string instance_digest(const BilevelInstance& inst) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : instance_to_string(inst)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

GenerateResult cmd_generate(const GenerateArgs& a) {
    if (a.n == 0) throw MalformedProblem("--n must be positive");
    GenerateResult r;
    if (a.kind == "general") {
        GeneralGenConfig cfg;
        cfg.n_x = a.n;
        cfg.seed = a.seed;
        cfg.ny_ratio = a.ny_ratio;
        cfg.bin_ratio = a.bin_ratio;
        cfg.sparsity = a.sparsity;
        cfg.constraint_ratio = a.constraint_ratio;
        cfg.validate();
        r.inst = gen_general(cfg);
    } else if (a.kind == "facility") {
        if (a.general_knobs_set)
            throw MalformedProblem("--ny-ratio, --bin-ratio, --sparsity and --constraint-ratio apply to --kind general only");
        FacilityGenConfig cfg;
        cfg.n = a.n;
        cfg.seed = a.seed;
        r.inst = gen_facility(cfg);
        r.budget = cfg.budget();
    } else {
        throw MalformedProblem("--kind must be general or facility, got '" + a.kind + "'");
    }
    r.digest = instance_digest(r.inst);
    if (!a.out.empty()) save_instance(r.inst, a.out);
    return r;
}

void RunManifest::validate() const {
    if (instances.empty()) throw MalformedProblem("no instance given");
    for (const auto& p : instances)
        if (!fs::exists(p)) throw MalformedProblem("instance file not found: " + p);
    if (!rule_path.empty() && !fs::exists(rule_path)) throw MalformedProblem("rule file not found: " + rule_path);
    if (instances.size() > 1 && !result_path.empty() && result_path.find("{stem}") == std::string::npos)
        throw MalformedProblem("several instances need {stem} in the result path");
    for (const auto& p : instances) strategy.validate(load_instance(p));
}

std::string solve_csv_row(const std::string& instance, const BilevelSolution& sol) {
    std::ostringstream os;
    os << kSolveCsvSchema << ',' << instance << ',' << sol.strategy << ',' << num(sol.objective) << ','
       << num(sol.bound) << ',' << num(sol.gap) << ',' << sol.phi_solves << ',' << num(sol.coeff_ms) << ','
       << num(sol.solve_ms);
    return os.str();
}

std::vector<SolveOutcome> cmd_solve(const RunManifest& m) {
    m.validate();
    std::vector<SolveOutcome> res;
    DriverConfig cfg = m.config;
    cfg.seed = m.seed;
    if (!m.rule_path.empty()) cfg.learned.rule = load_rule(m.rule_path);
    for (const auto& path : m.instances) {
        const auto inst = load_instance(path);
        SolveOutcome o;
        o.instance = path;
        o.solution = solve_bilevel(inst, m.strategy, cfg);
        o.csv_row = solve_csv_row(stem(path), o.solution);
        if (auto rp = result_path_for(m, path); !rp.empty()) save_solution(o.solution, rp);
        if (!m.csv_path.empty()) append_csv(m.csv_path, kSolveCsvHeader, {o.csv_row});
        res.push_back(std::move(o));
    }
    return res;
}

VerifyReport cmd_verify(const VerifyArgs& a) {
    const auto inst = load_instance(a.instance);
    const auto sol = load_solution(a.result);
    VerifyOptions opts;
    opts.seed = a.seed;
    return verify_solution(inst, sol, opts);
}

TrainResult cmd_train(const TrainArgs& a) {
    const auto inst = load_instance(a.instance);
    PhiCache cache(inst);
    const auto samples = sample_training_data(inst, a.samples, a.seed, &cache);
    TrainOptions opts = a.train;
    opts.seed = a.seed;
    opts.record_losses = opts.record_losses || !a.loss_csv.empty();
    auto res = train_rule(samples, inst.n_x, inst.n_b(), opts);
    if (!a.out.empty()) save_rule(res.rule, a.out);
    if (!a.loss_csv.empty()) {
        std::ofstream f(a.loss_csv);
        if (!f) throw Error("cannot write " + a.loss_csv);
        f << kLossCsvHeader << '\n';
        for (std::size_t e = 0; e < res.losses.size(); ++e) f << kLossCsvSchema << ',' << e + 1 << ',' << num(res.losses[e]) << '\n';
    }
    return res;
}

const char* to_string(Sweep s) {
    switch (s) {
        case Sweep::BinRatio: return "bin-ratio";
        case Sweep::NyRatio: return "ny-ratio";
        case Sweep::Sparsity: return "sparsity";
    }
    return "?";
}

Sweep sweep_from_string(const std::string& s) {
    for (auto w : {Sweep::BinRatio, Sweep::NyRatio, Sweep::Sparsity})
        if (s == to_string(w)) return w;
    throw MalformedProblem("unknown sweep '" + s + "' (bin-ratio, ny-ratio, sparsity)");
}

std::vector<double> sweep_values(Sweep s) {
    switch (s) {
        case Sweep::BinRatio: return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
        case Sweep::NyRatio: return {0.5, 0.75, 1.0, 1.25, 1.5};
        case Sweep::Sparsity: return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    }
    return {};
}

std::string BenchRow::csv() const {
    std::ostringstream os;
    os << kBenchCsvSchema << ',' << to_string(sweep) << ',' << num(value) << ',' << instance << ','
       << solution.strategy << ',' << bilevel::to_string(solution.status) << ',' << num(solution.objective) << ','
       << num(solution.bound) << ',' << num(solution.gap) << ',' << (oracle ? num(*oracle) : "") << ','
       << (oracle_match ? 1 : 0) << ',' << solution.phi_solves << ',' << num(solution.coeff_ms) << ','
       << num(solution.solve_ms);
    return os.str();
}

std::vector<BenchRow> cmd_bench(const BenchArgs& a) {
    if (a.sweeps.empty()) throw MalformedProblem("no sweep selected");
    if (a.oracle && a.n > kBruteForceMaxTenders) throw MalformedProblem("--oracle needs --n <= 14");
    if (!a.out_dir.empty()) fs::create_directories(a.out_dir);
    std::vector<BenchRow> all;
    for (auto sw : a.sweeps) {
        std::vector<std::string> lines;
        for (double v : sweep_values(sw)) {
            for (std::size_t k = 0; k < a.per_value; ++k) {
                GeneralGenConfig cfg;
                cfg.n_x = a.n;
                cfg.seed = a.seed + k;
                if (sw == Sweep::BinRatio) cfg.bin_ratio = v;
                if (sw == Sweep::NyRatio) cfg.ny_ratio = v;
                if (sw == Sweep::Sparsity) cfg.sparsity = v;
                const auto inst = gen_general(cfg);
                BenchRow row;
                row.sweep = sw;
                row.value = v;
                row.instance = "general_n" + std::to_string(a.n) + "_" + to_string(sw) + num(v) + "_s" +
                               std::to_string(cfg.seed);
                PhiCache cache(inst);
                row.solution = solve_bilevel(inst, a.strategy, a.config, cache);
                if (a.oracle) {
                    const auto bf = brute_force_solve(inst, cache);
                    if (bf.has_solution) row.oracle = bf.objective;
                    row.oracle_match = bf.status == row.solution.status &&
                                       (!bf.has_solution || std::abs(bf.objective - row.solution.objective) <=
                                                                1e-6 * std::max(1.0, std::abs(bf.objective)));
                }
                lines.push_back(row.csv());
                all.push_back(std::move(row));
            }
        }
        if (!a.out_dir.empty()) {
            const auto path = (fs::path(a.out_dir) / ("bench_" + std::string(to_string(sw)) + ".csv")).string();
            std::ofstream f(path);
            if (!f) throw Error("cannot write " + path);
            f << kBenchCsvHeader << '\n';
            for (const auto& l : lines) f << l << '\n';
        }
    }
    return all;
}

namespace {

struct UsageError : Error {
    using Error::Error;
};

void print_solution(std::ostream& out, const BilevelSolution& s) {
    out << "status " << bilevel::to_string(s.status) << "  objective " << num(s.objective) << "  bound "
        << num(s.bound) << "  gap " << num(s.gap) << "  cuts " << s.cuts.size() << "  phi_solves " << s.phi_solves
        << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bilevel MILP solver with value-function cuts"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "write a random instance");
    g->add_option("--kind", gen.kind, "general or facility")->required();
    g->add_option("--n", gen.n, "tenders (general) or facilities")->required();
    g->add_option("--seed", seed)->required();
    auto* o_ny = g->add_option("--ny-ratio", gen.ny_ratio);
    auto* o_bin = g->add_option("--bin-ratio", gen.bin_ratio);
    auto* o_sp = g->add_option("--sparsity", gen.sparsity);
    auto* o_cr = g->add_option("--constraint-ratio", gen.constraint_ratio);
    g->add_option("--out", gen.out, "instance JSON path")->required();

    RunManifest man;
    std::string strategy = "penalty/exact", coeff, extras;
    double time_limit = 0.0;
    std::size_t node_limit = 0, samples = 1000, epochs = 1000;
    auto* s = app.add_subcommand("solve", "solve instances with one strategy");
    s->add_option("--instance", man.instances, "instance JSON (repeatable)")->required();
    s->add_option("--strategy", strategy, "family[/mode][+extra...] or learned_replace");
    s->add_option("--coeff", coeff, "exact, quick, closed-sub or closed-super");
    s->add_option("--extras", extras, "comma list of ldr, learned");
    s->add_option("--time-limit", time_limit, "seconds, 0 for none");
    s->add_option("--node-limit", node_limit, "0 for none");
    s->add_flag("--assert-structure", man.config.assert_structure, "trust the stated modularity");
    s->add_option("--rule", man.rule_path, "trained rule JSON for learned strategies");
    s->add_option("--samples", samples, "training samples when no rule is given");
    s->add_option("--epochs", epochs, "training epochs when no rule is given");
    s->add_option("--out", man.result_path, "result JSON; {stem} expands to the instance name");
    s->add_option("--csv", man.csv_path, "append a table row here");
    s->add_option("--seed", seed)->required();

    VerifyArgs ver;
    auto* v = app.add_subcommand("verify", "replay a result against its instance");
    v->add_option("--instance", ver.instance)->required()->check(CLI::ExistingFile);
    v->add_option("--result", ver.result)->required()->check(CLI::ExistingFile);
    v->add_option("--seed", seed)->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "fit a neural rule for the follower's binary block");
    t->add_option("--instance", tr.instance)->required()->check(CLI::ExistingFile);
    t->add_option("--samples", tr.samples);
    t->add_option("--epochs", tr.train.epochs);
    t->add_option("--lr", tr.train.lr);
    t->add_option("--decay", tr.train.decay);
    t->add_option("--out", tr.out, "rule JSON")->required();
    t->add_option("--loss-csv", tr.loss_csv);
    t->add_option("--seed", seed)->required();

    BenchArgs bench;
    std::vector<std::string> sweeps;
    std::string bench_strategy = "penalty/quick";
    bool no_oracle = false;
    auto* b = app.add_subcommand("bench", "seeded sensitivity sweeps over general instances");
    b->add_option("--sweep", sweeps, "bin-ratio, ny-ratio, sparsity or all")->required();
    b->add_option("--n", bench.n);
    b->add_option("--per-value", bench.per_value, "instances per grid value");
    b->add_option("--strategy", bench_strategy);
    b->add_flag("--no-oracle", no_oracle, "skip brute force");
    b->add_option("--out-dir", bench.out_dir)->required();
    b->add_option("--seed", seed)->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (g->parsed()) {
            gen.seed = seed;
            gen.general_knobs_set = o_ny->count() + o_bin->count() + o_sp->count() + o_cr->count() > 0;
            GenerateResult r;
            try {
                r = cmd_generate(gen);
            } catch (const MalformedProblem& e) {
                throw UsageError(e.what());
            }
            out << "wrote " << gen.out << "  n_x " << r.inst.n_x << "  n_y " << r.inst.n_y << "  digest " << r.digest;
            if (r.budget) out << "  budget B=" << *r.budget;
            out << '\n';
            return kOk;
        }
        if (s->parsed()) {
            try {
                man.strategy = Strategy::parse(strategy);
                if (!coeff.empty()) {
                    const auto c = Strategy::parse("penalty/" + coeff);
                    man.strategy.coeffs = c.coeffs;
                    if (c.kind) man.strategy.kind = c.kind;
                }
                std::stringstream ex(extras);
                for (std::string e; std::getline(ex, e, ',');) {
                    if (e == "ldr") man.strategy.ldr = true;
                    else if (e == "learned") man.strategy.learned_augment = true;
                    else if (!e.empty()) throw MalformedProblem("unknown extra '" + e + "'");
                }
                man.seed = seed;
                man.config.limits.time_limit_s = time_limit;
                man.config.limits.max_nodes = node_limit;
                man.config.learned.samples = samples;
                man.config.learned.train.epochs = epochs;
                man.config.learned.train.seed = seed;
                man.validate();
            } catch (const MalformedProblem& e) {
                throw UsageError(e.what());
            } catch (const AssumptionViolation& e) {
                throw UsageError(e.what());
            }
            int code = kOk;
            std::vector<SolveOutcome> res;
            try {
                res = cmd_solve(man);
            } catch (const AssumptionViolation& e) {
                // Structure guards fire inside the solve.
                throw UsageError(e.what());
            }
            for (const auto& o : res) {
                out << o.instance << ": ";
                print_solution(out, o.solution);
                if (man.strategy.learned_replace) {
                    out << "  lower bound " << num(o.solution.bound) << "  fixed-x upper bound "
                        << num(o.solution.objective);
                    if (o.solution.learned_valid) out << "  learned cut " << (*o.solution.learned_valid ? "held" : "FAILED") << " at x";
                    out << '\n';
                }
                if (o.solution.status == BilevelStatus::Infeasible) code = kInfeasible;
            }
            return code;
        }
        if (v->parsed()) {
            ver.seed = seed;
            const auto rep = cmd_verify(ver);
            if (rep.ok) {
                out << "pass  cuts " << rep.cuts_checked << "  points " << rep.points_checked << '\n';
                return kOk;
            }
            out << "FAIL\n";
            for (const auto& f : rep.failures) out << "  " << f << '\n';
            return kVerifyFailed;
        }
        if (t->parsed()) {
            tr.seed = seed;
            const auto res = cmd_train(tr);
            out << "wrote " << tr.out << "  epochs " << res.epochs << "  final loss " << num(res.final_loss) << '\n';
            return kOk;
        }
        if (b->parsed()) {
            try {
                for (const auto& w : sweeps) {
                    if (w == "all") bench.sweeps = {Sweep::BinRatio, Sweep::NyRatio, Sweep::Sparsity};
                    else bench.sweeps.push_back(sweep_from_string(w));
                }
                bench.strategy = Strategy::parse(bench_strategy);
            } catch (const MalformedProblem& e) {
                throw UsageError(e.what());
            }
            bench.seed = seed;
            bench.oracle = !no_oracle;
            const auto rows = cmd_bench(bench);
            std::size_t matched = 0;
            for (const auto& r : rows) matched += r.oracle_match;
            out << rows.size() << " rows";
            if (bench.oracle) out << ", " << matched << " oracle-matched";
            out << '\n';
            return kOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsage;
}

}  // namespace bilevel::cli
