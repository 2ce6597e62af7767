#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bilevel/driver/driver.hpp"
#include "bilevel/model/instance.hpp"
#include "bilevel/rules/neural.hpp"

namespace bilevel::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsage = 2, kVerifyFailed = 3, kInfeasible = 4 };

inline constexpr const char* kSolveCsvHeader =
    "schema,instance,strategy,objective,bound,gap,phi_solves,coeff_time_ms,solve_time_ms";
inline constexpr const char* kSolveCsvSchema = "solve.v1";
inline constexpr const char* kBenchCsvHeader =
    "schema,sweep,value,instance,strategy,status,objective,bound,gap,oracle,oracle_match,phi_solves,coeff_time_ms,"
    "solve_time_ms";
inline constexpr const char* kBenchCsvSchema = "bench.v1";
inline constexpr const char* kLossCsvHeader = "schema,epoch,loss";
inline constexpr const char* kLossCsvSchema = "loss.v1";

/// 64-bit FNV-1a of the canonical instance text, as 16 hex digits.
std::string instance_digest(const BilevelInstance& inst);

struct GenerateArgs {
    std::string kind = "general";  // general | facility
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double ny_ratio = 1.0;
    double bin_ratio = 0.5;
    double sparsity = 0.0;
    double constraint_ratio = 0.4;
    bool general_knobs_set = false;  // any of the above given explicitly
    std::string out;                 // empty: do not write
};

struct GenerateResult {
    BilevelInstance inst;
    std::string digest;
    std::optional<std::size_t> budget;  // facility only
};

/// Throws MalformedProblem naming the bad flag combination.
GenerateResult cmd_generate(const GenerateArgs& args);

/// One solve: what to run, on what, and where results go.
struct RunManifest {
    std::vector<std::string> instances;
    Strategy strategy;
    DriverConfig config;
    std::string rule_path;    // learned strategies: load instead of training
    std::string result_path;  // JSON per instance; "{stem}" is replaced when several instances are given
    std::string csv_path;     // rows appended, header written once
    std::uint64_t seed = 0;

    /// Files exist and the strategy fits every instance.
    void validate() const;
};

struct SolveOutcome {
    std::string instance;
    BilevelSolution solution;
    std::string csv_row;
};

std::vector<SolveOutcome> cmd_solve(const RunManifest& m);

std::string solve_csv_row(const std::string& instance, const BilevelSolution& sol);

struct VerifyArgs {
    std::string instance, result;
    std::uint64_t seed = 0;
};

VerifyReport cmd_verify(const VerifyArgs& args);

struct TrainArgs {
    std::string instance;
    std::size_t samples = 1000;
    TrainOptions train;
    std::uint64_t seed = 0;
    std::string out;       // rule JSON
    std::string loss_csv;  // optional loss curve
};

TrainResult cmd_train(const TrainArgs& args);

enum class Sweep { BinRatio, NyRatio, Sparsity };

const char* to_string(Sweep s);
Sweep sweep_from_string(const std::string& s);
std::vector<double> sweep_values(Sweep s);

struct BenchArgs {
    std::vector<Sweep> sweeps;
    std::size_t n = 10;
    std::size_t per_value = 1;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::parse("penalty/quick");
    DriverConfig config;
    bool oracle = true;   // brute force each cell (n <= 14)
    std::string out_dir;  // one CSV per sweep; empty: do not write
};

struct BenchRow {
    Sweep sweep = Sweep::BinRatio;
    double value = 0.0;
    std::string instance;
    BilevelSolution solution;
    std::optional<double> oracle;
    bool oracle_match = true;

    std::string csv() const;
};

std::vector<BenchRow> cmd_bench(const BenchArgs& args);

/// Entry point for the executable. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bilevel::cli
