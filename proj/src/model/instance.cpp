#include "bilevel/model/instance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bilevel/common/error.hpp"

namespace bilevel {

double BilevelInstance::y_lower(std::size_t j) const {
    if (y_is_binary(j)) return 0.0;
    const auto it = std::lower_bound(continuous_y.begin(), continuous_y.end(), j);
    return y2_bounds[static_cast<std::size_t>(it - continuous_y.begin())].first;
}

double BilevelInstance::y_upper(std::size_t j) const {
    if (y_is_binary(j)) return 1.0;
    const auto it = std::lower_bound(continuous_y.begin(), continuous_y.end(), j);
    return y2_bounds[static_cast<std::size_t>(it - continuous_y.begin())].second;
}

bool BilevelInstance::y_is_binary(std::size_t j) const {
    return std::binary_search(binary_y.begin(), binary_y.end(), j);
}

void BilevelInstance::finalize_domain() {
    std::sort(binary_y.begin(), binary_y.end());
    continuous_y.clear();
    for (std::size_t j = 0; j < n_y; ++j)
        if (!std::binary_search(binary_y.begin(), binary_y.end(), j)) continuous_y.push_back(j);
    if (y2_bounds.empty()) y2_bounds.assign(continuous_y.size(), {0.0, kDefaultY2Upper});
}

namespace {

void check_vec(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n)
        throw MalformedProblem(std::string(name) + " has length " + std::to_string(v.size()) + ", expected " +
                               std::to_string(n));
    for (double e : v)
        if (!std::isfinite(e)) throw MalformedProblem(std::string(name) + " has a non-finite entry");
}

void check_mat(const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows() != r || m.cols() != c)
        throw MalformedProblem(std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                               std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
                               std::to_string(c));
    for (std::size_t i = 0; i < r; ++i)
        for (double e : m.row(i))
            if (!std::isfinite(e)) throw MalformedProblem(std::string(name) + " has a non-finite entry");
}

}  // namespace

void BilevelInstance::validate() const {
    check_vec(c_u, n_x, "c_u");
    check_vec(d_u, n_y, "d_u");
    check_vec(d_l, n_y, "d_l");
    check_mat(A_u, m_u(), n_x, "A_u");
    check_mat(B_u, m_u(), n_y, "B_u");
    check_mat(A_l, m_l(), n_x, "A_l");
    check_mat(B_l, m_l(), n_y, "B_l");
    check_vec(h_u, m_u(), "h_u");
    check_vec(h_l, m_l(), "h_l");
    for (std::size_t k = 0; k < binary_y.size(); ++k) {
        if (binary_y[k] >= n_y) throw MalformedProblem("binary y index out of range");
        if (k > 0 && binary_y[k] <= binary_y[k - 1]) throw MalformedProblem("binary y indices not strictly increasing");
    }
    if (binary_y.size() + continuous_y.size() != n_y) throw MalformedProblem("y index sets do not partition y");
    if (y2_bounds.size() != continuous_y.size()) throw MalformedProblem("y2_bounds count differs from continuous y count");
    for (const auto& [lo, hi] : y2_bounds)
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw MalformedProblem("bad y2 bound pair");
}

BilevelInstance make_instance(std::vector<double> c_u, std::vector<double> d_u,
                              std::vector<std::vector<double>> A_u, std::vector<std::vector<double>> B_u,
                              std::vector<double> h_u, std::vector<double> d_l,
                              std::vector<std::vector<double>> A_l, std::vector<std::vector<double>> B_l,
                              std::vector<double> h_l, std::vector<std::size_t> binary_y,
                              std::vector<std::pair<double, double>> y2_bounds) {
    BilevelInstance inst;
    inst.n_x = c_u.size();
    inst.n_y = d_u.size();
    inst.c_u = std::move(c_u);
    inst.d_u = std::move(d_u);
    inst.A_u = Matrix::from_rows(A_u, inst.n_x);
    inst.B_u = Matrix::from_rows(B_u, inst.n_y);
    inst.h_u = std::move(h_u);
    inst.d_l = std::move(d_l);
    inst.A_l = Matrix::from_rows(A_l, inst.n_x);
    inst.B_l = Matrix::from_rows(B_l, inst.n_y);
    inst.h_l = std::move(h_l);
    inst.binary_y = std::move(binary_y);
    inst.y2_bounds = std::move(y2_bounds);
    inst.finalize_domain();
    inst.validate();
    return inst;
}

}  // namespace bilevel
