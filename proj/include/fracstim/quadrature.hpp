#pragma once

#include "fracstim/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace fracstim {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

/// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
/// mu0 times the squared first eigenvector components.
inline QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NonConvergence("tridiagonal eigenproblem did not converge");
  QuadratureRule r;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    r.nodes.push_back(solver.eigenvalues()(i));
    double v = solver.eigenvectors()(0, i);
    r.weights.push_back(mu0 * v * v);
  }
  return r;
}

}  // namespace detail

/// Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b, a, b > -1.
inline QuadratureRule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw DomainError("quadrature needs at least one node");
  if (!(a > -1 && b > -1)) throw DomainError("Jacobi exponents must exceed -1");
  Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) {
    double s = 2.0 * k + a + b;
    diag(k) = (k == 0 && std::abs(a + b) < 1e-14) ? (b - a) / (a + b + 2) : (b * b - a * a) / (s * (s + 2));
  }
  for (int k = 1; k < n; ++k) {
    double s = 2.0 * k + a + b;
    off(k - 1) = std::sqrt(4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1) * (s - 1)));
  }
  double mu0 = std::exp((a + b + 1) * std::log(2.0) + std::lgamma(a + 1) + std::lgamma(b + 1) - std::lgamma(a + b + 2));
  return detail::golub_welsch(diag, off, mu0);
}

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0, 0); }

/// Gauss-Laguerre rule on [0, inf) for the weight e^{-x}.
inline QuadratureRule gauss_laguerre(int n) {
  if (n < 1) throw DomainError("quadrature needs at least one node");
  Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag(k) = 2.0 * k + 1;
  for (int k = 1; k < n; ++k) off(k - 1) = k;
  return detail::golub_welsch(diag, off, 1.0);
}

namespace detail {

/// Rules are cached per (kind, n, a); construction is O(n^3).
inline const QuadratureRule& cached_rule(int kind, int n, double a) {
  static std::map<std::tuple<int, int, double>, QuadratureRule> cache;
  static std::mutex lock;
  std::lock_guard<std::mutex> guard(lock);
  auto key = std::make_tuple(kind, n, a);
  auto it = cache.find(key);
  if (it == cache.end()) {
    QuadratureRule r = kind == 0 ? gauss_jacobi(n, a, 0) : kind == 1 ? gauss_legendre(n) : gauss_laguerre(n);
    it = cache.emplace(key, std::move(r)).first;
  }
  return it->second;
}

constexpr int kGradedPower = 8;  // v = w^8 clusters nodes at the s = 0 endpoint

}  // namespace detail

/// Caputo derivative of order gamma, n-1 < gamma <= n, from the n-th
/// derivative f^{(n)}:
///   t^{n-gamma}/Gamma(n-gamma) * int_0^1 (1-v)^{n-gamma-1} f^{(n)}(t v) dv.
/// The (1-v) endpoint singularity is absorbed by Gauss-Jacobi; the grading
/// v = w^p tames algebraic behaviour of f^{(n)} at v = 0.
inline double caputo_quadrature_n(const std::function<double(double)>& f_n, double gamma, int n, double t,
                                  int nodes = 64) {
  if (!(gamma > n - 1 && gamma <= n)) throw DomainError("order must lie in (n-1, n]");
  if (!(t > 0)) throw DomainError("Caputo quadrature needs t > 0");
  if (gamma == n) return f_n(t);
  double a = n - gamma - 1;
  const QuadratureRule& rule = detail::cached_rule(0, nodes, a);
  const int p = detail::kGradedPower;
  long double sum = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    double w = (rule.nodes[i] + 1) / 2;  // [-1,1] -> [0,1]
    // (1 - w^p) = (1 - w) * (1 + w + ... + w^{p-1})
    double geometric = 0, wk = 1;
    for (int k = 0; k < p; ++k, wk *= w) geometric += wk;
    double v = std::pow(w, p);
    double jac = p * std::pow(w, p - 1);
    sum += rule.weights[i] * std::pow(geometric, a) * jac * f_n(t * v);
  }
  // dv over [0,1] from dx over [-1,1]: (1-w)^a = 2^{-a}(1-x)^a, dw = dx/2.
  double scale = std::pow(0.5, a + 1);
  return static_cast<double>(sum) * scale * std::pow(t, n - gamma) / std::tgamma(n - gamma);
}

/// Caputo derivative of order alpha in (0, 1) from the first derivative f'.
inline double caputo_quadrature(const std::function<double(double)>& f_prime, double alpha, double t,
                                int nodes = 64) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("Caputo quadrature order must lie in (0, 1)");
  return caputo_quadrature_n(f_prime, alpha, 1, t, nodes);
}

/// S[f](omega) = int_0^inf e^{-t} f(omega t) dt. The integral is split at
/// t = 1: Gauss-Legendre with t = y^6 on [0, 1] (handles t^a at 0), and
/// Gauss-Laguerre on the shifted tail. `nodes` are divided between the two.
inline double numeric_sumudu(const std::function<double(double)>& f, double omega, int nodes = 96) {
  if (!(omega > 0)) throw DomainError("Sumudu variable must be positive");
  if (nodes < 2) throw DomainError("numeric Sumudu needs at least two nodes");
  int head = nodes / 2, tail = nodes - head;
  const QuadratureRule& leg = detail::cached_rule(1, head, 0);
  const QuadratureRule& lag = detail::cached_rule(2, tail, 0);
  long double sum = 0;
  for (std::size_t i = 0; i < leg.nodes.size(); ++i) {
    double y = (leg.nodes[i] + 1) / 2;
    double t = std::pow(y, 6);
    sum += 0.5 * leg.weights[i] * 6 * std::pow(y, 5) * std::exp(-t) * f(omega * t);
  }
  long double tail_sum = 0;
  for (std::size_t i = 0; i < lag.nodes.size(); ++i) tail_sum += lag.weights[i] * f(omega * (1 + lag.nodes[i]));
  double total = static_cast<double>(sum + tail_sum * std::exp(-1.0L));
  if (!std::isfinite(total)) throw NonConvergence("numeric Sumudu overflowed");
  return total;
}

}  // namespace fracstim
