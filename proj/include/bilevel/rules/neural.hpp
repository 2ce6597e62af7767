#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bilevel/common/binary.hpp"
#include "bilevel/common/matrix.hpp"
#include "bilevel/milp/milp.hpp"
#include "bilevel/model/value_function.hpp"

namespace bilevel {

/// One affine map W z + b + D x; D is empty (0 rows) on the first layer.
struct NeuralLayer {
    Matrix W;
    std::vector<double> b;
    Matrix D;

    std::size_t width() const { return b.size(); }
};

/// K hidden layers plus the output layer, with passthrough from x.
struct NeuralRule {
    std::vector<NeuralLayer> layers;

    std::size_t K() const { return layers.empty() ? 0 : layers.size() - 1; }
    std::size_t n_in() const;
    std::size_t n_out() const { return layers.empty() ? 0 : layers.back().width(); }
    std::size_t num_params() const;

    /// Throws MalformedProblem on inconsistent shapes or non-finite weights.
    void validate() const;
};

enum class RuleInit { Xavier, Zero };

/// Hidden widths (K entries); output width n_out.
NeuralRule make_rule(std::size_t n_in, const std::vector<std::size_t>& hidden, std::size_t n_out, RuleInit init,
                     std::uint64_t seed);

std::vector<std::size_t> default_hidden_widths(std::size_t n_x);

/// Sigmoid outputs in (0, 1).
std::vector<double> evaluate_rule(const NeuralRule& rule, std::span<const double> x);

/// clip(a/5 + 1/2) on hidden layers and step (1 when a >= 0) at the output.
BinaryVector evaluate_rule_pwl(const NeuralRule& rule, std::span<const std::uint8_t> x);

inline constexpr double kStepTolerance = 1e-6;

struct TrainingSample {
    BinaryVector x;
    BinaryVector y1;
};

/// Uniform tenders with a feasible lower level, labelled by the follower's
/// binary block. Throws Error if fewer than 1 in 10 draws are feasible.
std::vector<TrainingSample> sample_training_data(const BilevelInstance& inst, std::size_t count,
                                                 std::uint64_t seed, PhiCache* cache = nullptr);

/// Mean binary cross-entropy over samples and outputs.
double training_loss(const NeuralRule& rule, const std::vector<TrainingSample>& samples);

/// Gradient of training_loss in the order of flatten().
std::vector<double> loss_gradient(const NeuralRule& rule, const std::vector<TrainingSample>& samples);

/// Parameters layer by layer: W, b, D (row-major).
std::vector<double> flatten(const NeuralRule& rule);
void unflatten(NeuralRule& rule, std::span<const double> params);

struct TrainOptions {
    std::vector<std::size_t> hidden;  // empty: default_hidden_widths
    std::size_t epochs = 1000;
    double lr = 0.01;
    double decay = 0.001;  // lr / (1 + decay * epoch)
    RuleInit init = RuleInit::Xavier;
    std::uint64_t seed = 0;
    /// Keep the loss after every epoch in TrainResult::losses.
    bool record_losses = false;
};

struct TrainResult {
    NeuralRule rule;
    double final_loss = 0.0;
    std::size_t epochs = 0;
    std::vector<double> losses;
};

/// Full-batch Adam. Throws NumericalTrouble naming the epoch if the loss
/// stops being finite.
TrainResult train_rule(const std::vector<TrainingSample>& samples, std::size_t n_in, std::size_t n_out,
                       const TrainOptions& opts);

struct EncodedRule {
    std::vector<std::size_t> outputs;               // binary, y1 estimate
    std::vector<std::vector<std::size_t>> hidden;   // clipped activations
    double max_big_m = 0.0;
};

inline constexpr double kMaxBigM = 1e7;

/// Adds the PWL network to `b` with input variables `x_vars` (binary).
/// For every binary x the encoding admits exactly evaluate_rule_pwl(x).
EncodedRule encode_rule(const NeuralRule& rule, ModelBuilder& b, const std::vector<std::size_t>& x_vars);

nlohmann::json rule_to_json(const NeuralRule& rule);
NeuralRule rule_from_json(const nlohmann::json& j);
void save_rule(const NeuralRule& rule, const std::string& path);
NeuralRule load_rule(const std::string& path);

struct LearnedCutOptions {
    /// Upper bound on the duals; <= 0 picks 10 max(1, |d_l2|_1, |h_l|_inf).
    double pi_bound = 0.0;
};

struct LearnedCutInfo {
    EncodedRule rule;
    std::vector<std::size_t> pi;
    double pi_bound = 0.0;
};

double default_pi_bound(const BilevelInstance& inst);

/// Adds d_l'y >= d_l1'y1~(x) + (h - A x - B1 y1~)'pi with B2'pi = d_l2,
/// 0 <= pi <= pi_bound, products linearized exactly. `y_vars` are the
/// builder indices of the follower variables. Finite y2 bounds count as
/// rows. Throws AssumptionViolation if no such pi exists.
LearnedCutInfo learned_cut(const BilevelInstance& inst, const NeuralRule& rule, ModelBuilder& b,
                           const std::vector<std::size_t>& x_vars, const std::vector<std::size_t>& y_vars,
                           const LearnedCutOptions& opts = {});

/// Right-hand side of the learned cut at a tender (LP over pi).
double learned_cut_rhs(const BilevelInstance& inst, const NeuralRule& rule, std::span<const std::uint8_t> x,
                       const LearnedCutOptions& opts = {});

}  // namespace bilevel
