#include "bilevel/rules/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bilevel/common/error.hpp"
#include "bilevel/common/rng.hpp"

namespace bilevel {

std::size_t NeuralRule::n_in() const { return layers.empty() ? 0 : layers.front().W.cols(); }

std::size_t NeuralRule::num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.W.rows() * l.W.cols() + l.b.size() + l.D.rows() * l.D.cols();
    return n;
}

void NeuralRule::validate() const {
    if (layers.empty()) throw MalformedProblem("rule has no layers");
    const std::size_t nx = n_in();
    std::size_t prev = nx;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& L = layers[l];
        const std::string where = "layer " + std::to_string(l);
        const bool empty = L.b.empty();  // column counts do not survive a round trip then
        if (L.W.rows() != L.b.size() || (!empty && L.W.cols() != prev))
            throw MalformedProblem(where + ": W has wrong shape");
        if (l == 0 && L.D.rows() != 0) throw MalformedProblem(where + ": first layer takes no passthrough");
        if (l > 0 && (L.D.rows() != L.b.size() || (!empty && L.D.cols() != nx)))
            throw MalformedProblem(where + ": D has wrong shape");
        auto finite = [](const Matrix& m) {
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (double v : m.row(i))
                    if (!std::isfinite(v)) return false;
            return true;
        };
        if (!finite(L.W) || !finite(L.D) || !std::all_of(L.b.begin(), L.b.end(), [](double v) { return std::isfinite(v); }))
            throw MalformedProblem(where + ": non-finite weight");
        prev = L.b.size();
    }
}

std::vector<std::size_t> default_hidden_widths(std::size_t n_x) {
    const std::size_t w = std::max<std::size_t>(8, 2 * n_x);
    return {w, w};
}

NeuralRule make_rule(std::size_t n_in, const std::vector<std::size_t>& hidden, std::size_t n_out, RuleInit init,
                     std::uint64_t seed) {
    NeuralRule rule;
    std::size_t prev = n_in;
    std::vector<std::size_t> widths = hidden;
    widths.push_back(n_out);
    for (std::size_t l = 0; l < widths.size(); ++l) {
        NeuralLayer L;
        L.W = Matrix(widths[l], prev, 0.0);
        L.b.assign(widths[l], 0.0);
        L.D = l == 0 ? Matrix() : Matrix(widths[l], n_in, 0.0);
        if (init == RuleInit::Xavier) {
            Rng rng(seed, l + 1);
            const double fan_in = static_cast<double>(L.W.cols() + L.D.cols());
            const double limit = std::sqrt(6.0 / std::max(1.0, fan_in + static_cast<double>(widths[l])));
            for (std::size_t i = 0; i < L.W.rows(); ++i)
                for (auto& v : L.W.row(i)) v = rng.uniform(-limit, limit);
            for (std::size_t i = 0; i < L.D.rows(); ++i)
                for (auto& v : L.D.row(i)) v = rng.uniform(-limit, limit);
        }
        rule.layers.push_back(std::move(L));
        prev = widths[l];
    }
    return rule;
}

namespace {

double sigmoid(double a) { return a >= 0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a)); }
double softplus(double a) { return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

// Pre-activations of every layer.
std::vector<std::vector<double>> forward(const NeuralRule& rule, std::span<const double> x,
                                         std::vector<std::vector<double>>& acts) {
    std::vector<std::vector<double>> pre(rule.layers.size());
    acts.assign(rule.layers.size(), {});
    std::vector<double> in(x.begin(), x.end());
    for (std::size_t l = 0; l < rule.layers.size(); ++l) {
        const auto& L = rule.layers[l];
        auto& a = pre[l];
        a = L.b;
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < in.size(); ++j) a[i] += L.W(i, j) * in[j];
            for (std::size_t j = 0; j < L.D.cols(); ++j) a[i] += L.D(i, j) * x[j];
        }
        acts[l].resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) acts[l][i] = sigmoid(a[i]);
        in = acts[l];
    }
    return pre;
}

void check_input(const NeuralRule& rule, std::size_t n) {
    if (n != rule.n_in()) throw MalformedProblem("rule input has wrong length");
}

}  // namespace

std::vector<double> evaluate_rule(const NeuralRule& rule, std::span<const double> x) {
    check_input(rule, x.size());
    std::vector<std::vector<double>> acts;
    forward(rule, x, acts);
    return acts.back();
}

BinaryVector evaluate_rule_pwl(const NeuralRule& rule, std::span<const std::uint8_t> x) {
    check_input(rule, x.size());
    const std::vector<double> xd = to_doubles(x);
    std::vector<double> in = xd;
    BinaryVector out;
    for (std::size_t l = 0; l < rule.layers.size(); ++l) {
        const auto& L = rule.layers[l];
        const bool last = l + 1 == rule.layers.size();
        std::vector<double> next(L.b.size());
        for (std::size_t i = 0; i < next.size(); ++i) {
            double a = L.b[i];
            for (std::size_t j = 0; j < in.size(); ++j) a += L.W(i, j) * in[j];
            for (std::size_t j = 0; j < L.D.cols(); ++j) a += L.D(i, j) * xd[j];
            next[i] = last ? (a >= -kStepTolerance ? 1.0 : 0.0) : std::clamp(a / 5.0 + 0.5, 0.0, 1.0);
        }
        in = std::move(next);
    }
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.5;
    return out;
}

std::vector<TrainingSample> sample_training_data(const BilevelInstance& inst, std::size_t count,
                                                 std::uint64_t seed, PhiCache* cache) {
    std::vector<TrainingSample> out;
    if (count == 0) return out;
    PhiCache local(inst);
    PhiCache& c = cache ? *cache : local;
    Rng rng(seed, 1);
    const std::size_t cap = 10 * count;
    std::size_t attempts = 0;
    while (out.size() < count && attempts < cap) {
        ++attempts;
        BinaryVector x(inst.n_x);
        for (auto& v : x) v = rng.bernoulli(0.5);
        const LowerSolution s = c.lower(x);
        if (!s.value) continue;
        out.push_back({std::move(x), s.y1(inst)});
    }
    if (out.size() < count)
        throw Error("lower level feasible at only " + std::to_string(out.size()) + " of " + std::to_string(attempts) +
                    " sampled tenders (below 10%)");
    return out;
}

double training_loss(const NeuralRule& rule, const std::vector<TrainingSample>& samples) {
    const std::size_t no = rule.n_out();
    if (samples.empty() || no == 0) return 0.0;
    double total = 0.0;
    std::vector<std::vector<double>> acts;
    for (const auto& s : samples) {
        const auto pre = forward(rule, to_doubles(s.x), acts);
        for (std::size_t o = 0; o < no; ++o) total += softplus(pre.back()[o]) - s.y1[o] * pre.back()[o];
    }
    return total / static_cast<double>(samples.size() * no);
}

std::vector<double> flatten(const NeuralRule& rule) {
    std::vector<double> p;
    p.reserve(rule.num_params());
    for (const auto& L : rule.layers) {
        for (std::size_t i = 0; i < L.W.rows(); ++i) p.insert(p.end(), L.W.row(i).begin(), L.W.row(i).end());
        p.insert(p.end(), L.b.begin(), L.b.end());
        for (std::size_t i = 0; i < L.D.rows(); ++i) p.insert(p.end(), L.D.row(i).begin(), L.D.row(i).end());
    }
    return p;
}

void unflatten(NeuralRule& rule, std::span<const double> p) {
    if (p.size() != rule.num_params()) throw MalformedProblem("parameter vector has wrong length");
    std::size_t k = 0;
    for (auto& L : rule.layers) {
        for (std::size_t i = 0; i < L.W.rows(); ++i)
            for (auto& v : L.W.row(i)) v = p[k++];
        for (auto& v : L.b) v = p[k++];
        for (std::size_t i = 0; i < L.D.rows(); ++i)
            for (auto& v : L.D.row(i)) v = p[k++];
    }
}

std::vector<double> loss_gradient(const NeuralRule& rule, const std::vector<TrainingSample>& samples) {
    NeuralRule g = rule;
    for (auto& L : g.layers) {
        L.W = Matrix(L.W.rows(), L.W.cols(), 0.0);
        std::fill(L.b.begin(), L.b.end(), 0.0);
        L.D = Matrix(L.D.rows(), L.D.cols(), 0.0);
    }
    const std::size_t no = rule.n_out();
    if (samples.empty() || no == 0) return flatten(g);
    const double scale = 1.0 / static_cast<double>(samples.size() * no);
    std::vector<std::vector<double>> acts;
    for (const auto& s : samples) {
        const std::vector<double> x = to_doubles(s.x);
        forward(rule, x, acts);
        std::vector<double> delta(no);
        for (std::size_t o = 0; o < no; ++o) delta[o] = (acts.back()[o] - s.y1[o]) * scale;
        for (std::size_t l = rule.layers.size(); l-- > 0;) {
            const auto& L = rule.layers[l];
            auto& G = g.layers[l];
            const std::vector<double>& in = l == 0 ? x : acts[l - 1];
            for (std::size_t i = 0; i < delta.size(); ++i) {
                for (std::size_t j = 0; j < in.size(); ++j) G.W(i, j) += delta[i] * in[j];
                G.b[i] += delta[i];
                for (std::size_t j = 0; j < L.D.cols(); ++j) G.D(i, j) += delta[i] * x[j];
            }
            if (l == 0) break;
            std::vector<double> prev(in.size(), 0.0);
            for (std::size_t j = 0; j < in.size(); ++j) {
                for (std::size_t i = 0; i < delta.size(); ++i) prev[j] += L.W(i, j) * delta[i];
                prev[j] *= in[j] * (1.0 - in[j]);
            }
            delta = std::move(prev);
        }
    }
    return flatten(g);
}

TrainResult train_rule(const std::vector<TrainingSample>& samples, std::size_t n_in, std::size_t n_out,
                       const TrainOptions& opts) {
    if (samples.empty()) throw Error("training needs at least one sample");
    for (const auto& s : samples)
        if (s.x.size() != n_in || s.y1.size() != n_out) throw MalformedProblem("training sample has wrong shape");
    const auto hidden = opts.hidden.empty() ? default_hidden_widths(n_in) : opts.hidden;
    TrainResult res;
    res.rule = make_rule(n_in, hidden, n_out, opts.init, opts.seed);
    std::vector<double> p = flatten(res.rule);
    std::vector<double> m(p.size(), 0.0), v(p.size(), 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double pow1 = 1.0, pow2 = 1.0;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        const auto grad = loss_gradient(res.rule, samples);
        pow1 *= b1;
        pow2 *= b2;
        const double lr = opts.lr / (1.0 + opts.decay * static_cast<double>(epoch));
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1 - b1) * grad[k];
            v[k] = b2 * v[k] + (1 - b2) * grad[k] * grad[k];
            p[k] -= lr * (m[k] / (1 - pow1)) / (std::sqrt(v[k] / (1 - pow2)) + eps);
        }
        unflatten(res.rule, p);
        if (!std::all_of(p.begin(), p.end(), [](double e) { return std::isfinite(e); }))
            throw NumericalTrouble("training diverged at epoch " + std::to_string(epoch));
        res.epochs = epoch + 1;
        if (opts.record_losses) res.losses.push_back(training_loss(res.rule, samples));
    }
    res.final_loss = training_loss(res.rule, samples);
    if (!std::isfinite(res.final_loss)) throw NumericalTrouble("training loss not finite after the last epoch");
    return res;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
    auto j = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) j.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return j;
}

Matrix matrix_from(const nlohmann::json& j, std::size_t cols_if_empty) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    return Matrix::from_rows(rows, rows.empty() ? cols_if_empty : rows.front().size());
}

}  // namespace

nlohmann::json rule_to_json(const NeuralRule& rule) {
    nlohmann::json j;
    j["K"] = rule.K();
    j["layers"] = nlohmann::json::array();
    for (const auto& L : rule.layers) j["layers"].push_back({{"W", matrix_json(L.W)}, {"b", L.b}, {"D", matrix_json(L.D)}});
    return j;
}

NeuralRule rule_from_json(const nlohmann::json& j) {
    NeuralRule rule;
    try {
        for (const auto& L : j.at("layers")) {
            NeuralLayer layer;
            layer.b = L.at("b").get<std::vector<double>>();
            layer.W = matrix_from(L.at("W"), 0);
            layer.D = matrix_from(L.at("D"), 0);
            if (layer.D.rows() == 0) layer.D = Matrix();
            rule.layers.push_back(std::move(layer));
        }
        if (j.at("K").get<std::size_t>() != rule.K()) throw SchemaError("K", "does not match the number of layers");
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("layers", e.what());
    }
    rule.validate();
    return rule;
}

void save_rule(const NeuralRule& rule, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << rule_to_json(rule).dump(1) << "\n";
}

NeuralRule load_rule(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("", e.what());
    }
    return rule_from_json(j);
}

}  // namespace bilevel
