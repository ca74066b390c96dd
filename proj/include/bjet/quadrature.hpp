#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bjet::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch on a symmetric Jacobi matrix with zero diagonal.
inline Rule golub_welsch(const std::vector<double>& offdiag, double mu0)
{
    const int n = static_cast<int>(offdiag.size()) + 1;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = offdiag[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = es.eigenvalues()(i);
        double v = es.eigenvectors()(0, i);
        r.weights[i] = mu0 * v * v;
    }
    return r;
}

/// Nodes and weights for the weight exp(-t^2) on the real line.
inline const Rule& hermite(int order)
{
    static std::map<int, Rule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    if (order < 1) throw std::invalid_argument("quadrature order must be positive");
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    std::vector<double> off(order - 1);
    for (int k = 1; k < order; ++k) off[k - 1] = std::sqrt(k / 2.0);
    return cache.emplace(order, golub_welsch(off, std::sqrt(std::numbers::pi))).first->second;
}

/// Nodes and weights for the unit weight on [-1, 1].
inline const Rule& legendre(int order)
{
    static std::map<int, Rule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    if (order < 1) throw std::invalid_argument("quadrature order must be positive");
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    std::vector<double> off(order - 1);
    for (int k = 1; k < order; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    return cache.emplace(order, golub_welsch(off, 2.0)).first->second;
}

/// Legendre rule mapped to [a, b].
inline Rule legendre_on(int order, double a, double b)
{
    const Rule& r = legendre(order);
    Rule out;
    double h = 0.5 * (b - a), c = 0.5 * (b + a);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        out.nodes.push_back(c + h * r.nodes[i]);
        out.weights.push_back(h * r.weights[i]);
    }
    return out;
}

} // namespace bjet::quad
