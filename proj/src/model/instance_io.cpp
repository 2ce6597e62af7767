#include "bilevel/model/instance_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bilevel/common/error.hpp"

namespace bilevel {

using nlohmann::json;

namespace {

const json& field(const json& obj, const std::string& parent, const char* key) {
    const std::string path = parent.empty() ? key : parent + "." + key;
    if (!obj.is_object()) throw SchemaError(parent.empty() ? "<root>" : parent, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path, "missing field");
    return *it;
}

std::vector<double> number_array(const json& v, const std::string& path, std::size_t n) {
    if (!v.is_array()) throw SchemaError(path, "expected an array");
    if (v.size() != n) throw SchemaError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

Matrix matrix(const json& v, const std::string& path, std::size_t rows, std::size_t cols) {
    if (!v.is_array()) throw SchemaError(path, "expected an array of rows");
    if (v.size() != rows) throw SchemaError(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(v.size()));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto r = number_array(v[i], path + "[" + std::to_string(i) + "]", cols);
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = r[j];
    }
    return m;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return rows;
}

}  // namespace

BilevelInstance instance_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("<root>", "expected an object");
    if (const auto dom = j.find("x_domain"); dom != j.end()) {
        if (!dom->is_string() || dom->get<std::string>() != "binary")
            throw SchemaError("x_domain", "tender variables must be binary; general integer or continuous tenders are not supported");
    }
    const json& nx = field(j, "", "n_x");
    if (!nx.is_number_integer() || nx.get<long long>() < 0) throw SchemaError("n_x", "expected a nonnegative integer");

    BilevelInstance inst;
    inst.n_x = nx.get<std::size_t>();
    const json& up = field(j, "", "upper");
    const json& lo = field(j, "", "lower");

    inst.c_u = number_array(field(up, "upper", "c_u"), "upper.c_u", inst.n_x);
    const json& du = field(up, "upper", "d_u");
    if (!du.is_array()) throw SchemaError("upper.d_u", "expected an array");
    inst.n_y = du.size();
    inst.d_u = number_array(du, "upper.d_u", inst.n_y);
    const json& hu = field(up, "upper", "h_u");
    if (!hu.is_array()) throw SchemaError("upper.h_u", "expected an array");
    inst.h_u = number_array(hu, "upper.h_u", hu.size());
    inst.A_u = matrix(field(up, "upper", "A_u"), "upper.A_u", inst.m_u(), inst.n_x);
    inst.B_u = matrix(field(up, "upper", "B_u"), "upper.B_u", inst.m_u(), inst.n_y);

    inst.d_l = number_array(field(lo, "lower", "d_l"), "lower.d_l", inst.n_y);
    const json& hl = field(lo, "lower", "h_l");
    if (!hl.is_array()) throw SchemaError("lower.h_l", "expected an array");
    inst.h_l = number_array(hl, "lower.h_l", hl.size());
    inst.A_l = matrix(field(lo, "lower", "A_l"), "lower.A_l", inst.m_l(), inst.n_x);
    inst.B_l = matrix(field(lo, "lower", "B_l"), "lower.B_l", inst.m_l(), inst.n_y);

    const json& bi = field(lo, "lower", "binary_y_indices");
    if (!bi.is_array()) throw SchemaError("lower.binary_y_indices", "expected an array");
    for (std::size_t k = 0; k < bi.size(); ++k) {
        const std::string path = "lower.binary_y_indices[" + std::to_string(k) + "]";
        if (!bi[k].is_number_integer()) throw SchemaError(path, "expected an integer");
        const auto v = bi[k].get<long long>();
        if (v < 0 || static_cast<std::size_t>(v) >= inst.n_y) throw SchemaError(path, "index out of range");
        inst.binary_y.push_back(static_cast<std::size_t>(v));
    }
    std::sort(inst.binary_y.begin(), inst.binary_y.end());
    if (std::adjacent_find(inst.binary_y.begin(), inst.binary_y.end()) != inst.binary_y.end())
        throw SchemaError("lower.binary_y_indices", "duplicate index");

    inst.finalize_domain();
    if (const auto yb = lo.find("y2_bounds"); yb != lo.end()) {
        if (!yb->is_array() || yb->size() != inst.n_c())
            throw SchemaError("lower.y2_bounds", "expected one [lo, hi] pair per continuous y");
        inst.y2_bounds.clear();
        for (std::size_t k = 0; k < yb->size(); ++k) {
            const auto pr = number_array((*yb)[k], "lower.y2_bounds[" + std::to_string(k) + "]", 2);
            if (pr[0] > pr[1]) throw SchemaError("lower.y2_bounds[" + std::to_string(k) + "]", "lower bound above upper bound");
            inst.y2_bounds.emplace_back(pr[0], pr[1]);
        }
    }
    try {
        inst.validate();
    } catch (const MalformedProblem& e) {
        throw SchemaError("<root>", e.what());
    }
    return inst;
}

json instance_to_json(const BilevelInstance& inst) {
    json j;
    j["n_x"] = inst.n_x;
    j["x_domain"] = "binary";
    j["upper"] = {{"c_u", inst.c_u}, {"d_u", inst.d_u}, {"A_u", matrix_json(inst.A_u)},
                  {"B_u", matrix_json(inst.B_u)}, {"h_u", inst.h_u}};
    json bounds = json::array();
    for (const auto& [a, b] : inst.y2_bounds) bounds.push_back({a, b});
    j["lower"] = {{"d_l", inst.d_l},
                  {"A_l", matrix_json(inst.A_l)},
                  {"B_l", matrix_json(inst.B_l)},
                  {"h_l", inst.h_l},
                  {"binary_y_indices", inst.binary_y},
                  {"y2_bounds", bounds}};
    return j;
}

std::string instance_to_string(const BilevelInstance& inst) { return instance_to_json(inst).dump(1) + "\n"; }

BilevelInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open instance file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("<root>", std::string("not valid JSON: ") + e.what());
    }
    return instance_from_json(j);
}

void save_instance(const BilevelInstance& inst, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write instance file " + path);
    out << instance_to_string(inst);
}

}  // namespace bilevel
