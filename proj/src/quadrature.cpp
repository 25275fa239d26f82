#include "femdual/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace femdual {

const TriQuadrature& edge_midpoint_rule() {
  static const TriQuadrature rule = [] {
    TriQuadrature r;
    r.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
    r.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return r;
  }();
  return rule;
}

namespace {

// Gauss-Legendre nodes/weights on [0,1].
void gauss_legendre_unit(int n, std::vector<double>& x,
                         std::vector<double>& w) {
  // Newton iteration on Legendre polynomials, standard construction.
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[n - 1 - i] = 0.5 * (1.0 + t);
    w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

TriQuadrature duffy_gauss_rule(int n) {
  if (n < 1 || n > 24) throw std::invalid_argument("duffy_gauss_rule: n");
  std::vector<double> x, w;
  gauss_legendre_unit(n, x, w);
  TriQuadrature rule;
  rule.points.reserve(n * n);
  rule.weights.reserve(n * n);
  // Reference triangle {xi >= 0, eta >= 0, xi + eta <= 1} via eta = (1-xi)t.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double xi = x[i];
      const double eta = (1.0 - xi) * x[j];
      const double weight = 2.0 * w[i] * w[j] * (1.0 - xi);
      rule.points.push_back({1.0 - xi - eta, xi, eta});
      rule.weights.push_back(weight);
    }
  }
  return rule;
}

}  // namespace femdual
