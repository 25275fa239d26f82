#include "femdual/integrands.hpp"

#include <cmath>
#include <stdexcept>

namespace femdual {

namespace {

// Radius r >= 0 solving r (r^2 + eps^2)^((p-2)/2) = m for m >= 0. The left
// side is strictly increasing for p > 1, so safeguarded Newton converges.
double invert_regularized_radial(double p, double eps, double m) {
  if (m <= 0.0) return 0.0;
  const auto value = [&](double r) {
    return r * std::pow(r * r + eps * eps, 0.5 * (p - 2.0));
  };
  const auto deriv = [&](double r) {
    const double w = std::pow(r * r + eps * eps, 0.5 * (p - 2.0));
    return w * (1.0 + (p - 2.0) * r * r / (r * r + eps * eps));
  };
  // bracket the root
  double lo = 0.0;
  double hi = std::max({m, std::pow(m, 1.0 / (p - 1.0)), eps, 1.0});
  while (value(hi) < m) hi *= 2.0;
  double r = std::min(hi, std::max(m, std::pow(m, 1.0 / (p - 1.0))));
  for (int it = 0; it < 200; ++it) {
    const double f = value(r) - m;
    if (f > 0.0)
      hi = r;
    else
      lo = r;
    const double step = f / deriv(r);
    double next = r - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - r) <= 1e-16 * (1.0 + r)) {
      r = next;
      break;
    }
    r = next;
  }
  return r;
}

}  // namespace

ConvexIntegrand make_p_power(double p) {
  if (p <= 1.0) throw std::invalid_argument("make_p_power: requires p > 1");
  const double q = p / (p - 1.0);
  ConvexIntegrand ci;
  ci.name = "p_power";
  ci.phi = [p](const Eigen::Vector2d& s) { return std::pow(s.norm(), p) / p; };
  ci.phi_star = [q](const Eigen::Vector2d& t) {
    return std::pow(t.norm(), q) / q;
  };
  ci.d_phi = [p](const Eigen::Vector2d& s) -> Eigen::Vector2d {
    const double r = s.norm();
    if (r == 0.0) return Eigen::Vector2d::Zero();
    return std::pow(r, p - 2.0) * s;
  };
  ci.d_phi_star = [q](const Eigen::Vector2d& t) -> Eigen::Vector2d {
    const double r = t.norm();
    if (r == 0.0) return Eigen::Vector2d::Zero();
    return std::pow(r, q - 2.0) * t;
  };
  ci.radial_ratio = [p](double r) {
    if (r == 0.0) return p < 2.0 ? kInf : (p == 2.0 ? 1.0 : 0.0);
    return std::pow(r, p - 2.0);
  };
  // the profile is infinite at 0 for p < 2 and vanishes there for p > 2
  ci.flow_eligible = (p == 2.0);
  if (p == 2.0) {
    ci.prox = [](const Eigen::Vector2d& v, double tau) -> Eigen::Vector2d {
      return tau / (1.0 + tau) * v;
    };
  }
  return ci;
}

ConvexIntegrand make_regularized_p_power(double p, double eps) {
  if (p <= 1.0)
    throw std::invalid_argument("make_regularized_p_power: requires p > 1");
  if (eps <= 0.0)
    throw std::invalid_argument("make_regularized_p_power: requires eps > 0");
  ConvexIntegrand ci;
  ci.name = "regularized_p_power";
  const auto phi_radial = [p, eps](double r) {
    return std::pow(r * r + eps * eps, 0.5 * p) / p;
  };
  ci.phi = [phi_radial](const Eigen::Vector2d& s) {
    return phi_radial(s.norm());
  };
  ci.d_phi = [p, eps](const Eigen::Vector2d& s) -> Eigen::Vector2d {
    return std::pow(s.squaredNorm() + eps * eps, 0.5 * (p - 2.0)) * s;
  };
  ci.phi_star = [p, eps, phi_radial](const Eigen::Vector2d& t) {
    const double m = t.norm();
    const double r = invert_regularized_radial(p, eps, m);
    return m * r - phi_radial(r);
  };
  ci.d_phi_star = [p, eps](const Eigen::Vector2d& t) -> Eigen::Vector2d {
    const double m = t.norm();
    if (m == 0.0) return Eigen::Vector2d::Zero();
    return invert_regularized_radial(p, eps, m) / m * t;
  };
  ci.radial_ratio = [p, eps](double r) {
    return std::pow(r * r + eps * eps, 0.5 * (p - 2.0));
  };
  ci.flow_eligible = (p <= 2.0);
  return ci;
}

ConvexIntegrand make_regularized_modulus(double eps) {
  if (eps <= 0.0)
    throw std::invalid_argument("make_regularized_modulus: requires eps > 0");
  ConvexIntegrand ci;
  ci.name = "regularized_modulus";
  ci.phi = [eps](const Eigen::Vector2d& s) {
    return std::sqrt(s.squaredNorm() + eps * eps);
  };
  ci.phi_star = [eps](const Eigen::Vector2d& t) {
    const double r2 = t.squaredNorm();
    if (r2 > 1.0) return kInf;
    return -eps * std::sqrt(1.0 - r2);
  };
  ci.d_phi = [eps](const Eigen::Vector2d& s) -> Eigen::Vector2d {
    return s / std::sqrt(s.squaredNorm() + eps * eps);
  };
  ci.d_phi_star = [eps](const Eigen::Vector2d& t) -> Eigen::Vector2d {
    const double r2 = t.squaredNorm();
    if (r2 >= 1.0)
      throw std::domain_error(
          "regularized_modulus: conjugate derivative at |t| >= 1");
    return eps / std::sqrt(1.0 - r2) * t;
  };
  ci.radial_ratio = [eps](double r) {
    return 1.0 / std::sqrt(r * r + eps * eps);
  };
  ci.flow_eligible = true;
  return ci;
}

ConvexIntegrand make_truncated_modulus(double eps) {
  if (eps <= 0.0)
    throw std::invalid_argument("make_truncated_modulus: requires eps > 0");
  ConvexIntegrand ci;
  ci.name = "truncated_modulus";
  ci.phi = [eps](const Eigen::Vector2d& s) {
    // quadratic branch inside |s| <= eps, linear branch outside; the two
    // meet with value eps/2 at the switch
    const double r = s.norm();
    return r <= eps ? r * r / (2.0 * eps) : r - 0.5 * eps;
  };
  ci.phi_star = [eps](const Eigen::Vector2d& t) {
    const double r2 = t.squaredNorm();
    if (r2 > 1.0) return kInf;
    return r2 / (2.0 * eps);
  };
  ci.d_phi = [eps](const Eigen::Vector2d& s) -> Eigen::Vector2d {
    const double r = s.norm();
    if (r <= eps) return s / eps;
    return s / r;
  };
  ci.d_phi_star = [eps](const Eigen::Vector2d& t) -> Eigen::Vector2d {
    if (t.squaredNorm() > 1.0)
      throw std::domain_error("truncated_modulus: conjugate derivative");
    return t / eps;
  };
  ci.radial_ratio = [eps](double r) { return 1.0 / std::max(r, eps); };
  ci.flow_eligible = true;
  return ci;
}

ConvexIntegrand make_modulus() {
  ConvexIntegrand ci;
  ci.name = "modulus";
  ci.phi = [](const Eigen::Vector2d& s) { return s.norm(); };
  ci.phi_star = [](const Eigen::Vector2d& t) {
    return t.squaredNorm() <= 1.0 + 1e-14 ? 0.0 : kInf;
  };
  ci.d_phi = [](const Eigen::Vector2d& s) -> Eigen::Vector2d {
    const double r = s.norm();
    if (r == 0.0) return Eigen::Vector2d::Zero();
    return s / r;
  };
  ci.d_phi_star = [](const Eigen::Vector2d& t) -> Eigen::Vector2d {
    (void)t;
    return Eigen::Vector2d::Zero();
  };
  ci.radial_ratio = [](double r) { return r == 0.0 ? kInf : 1.0 / r; };
  ci.flow_eligible = false;
  ci.prox = [](const Eigen::Vector2d& v, double tau) -> Eigen::Vector2d {
    // shrinkage: argmin |q| + (tau/2)|q - v|^2
    const double r = v.norm();
    if (r <= 1.0 / tau) return Eigen::Vector2d::Zero();
    return (1.0 - 1.0 / (tau * r)) * v;
  };
  return ci;
}

ConvexIntegrand make_unit_ball_indicator() {
  ConvexIntegrand ci;
  ci.name = "unit_ball_indicator";
  ci.phi = [](const Eigen::Vector2d& s) {
    return s.norm() <= 1.0 ? 0.0 : kInf;
  };
  ci.phi_star = [](const Eigen::Vector2d& t) { return t.norm(); };
  ci.d_phi = [](const Eigen::Vector2d&) -> Eigen::Vector2d {
    return Eigen::Vector2d::Zero();  // subgradient selection in the interior
  };
  ci.d_phi_star = [](const Eigen::Vector2d& t) -> Eigen::Vector2d {
    const double r = t.norm();
    if (r == 0.0) return Eigen::Vector2d::Zero();
    return t / r;
  };
  ci.radial_ratio = nullptr;
  ci.flow_eligible = false;
  ci.prox = [](const Eigen::Vector2d& v, double) -> Eigen::Vector2d {
    const double r = v.norm();
    if (r <= 1.0) return v;
    return v / r;
  };
  return ci;
}

ConvexIntegrand conjugate_of(const ConvexIntegrand& ci) {
  ConvexIntegrand out;
  out.name = ci.name + "_conjugate";
  out.phi = ci.phi_star;
  out.phi_star = ci.phi;
  out.d_phi = ci.d_phi_star;
  out.d_phi_star = ci.d_phi;
  if (ci.d_phi_star) {
    auto d = ci.d_phi_star;
    out.radial_ratio = [d](double r) {
      if (r == 0.0) {
        const double h = 1e-7;
        return d(Eigen::Vector2d(h, 0.0)).norm() / h;
      }
      return d(Eigen::Vector2d(r, 0.0)).norm() / r;
    };
  }
  out.flow_eligible = false;  // caller decides; eligibility is not involutive
  return out;
}

double fenchel_gap(const ConvexIntegrand& ci, const Eigen::Vector2d& s,
                   const Eigen::Vector2d& t) {
  const double a = ci.phi(s);
  const double b = ci.phi_star(t);
  if (a == kInf || b == kInf) return kInf;
  return a + b - s.dot(t);
}

Eigen::Vector2d p_power_f_map(double p, const Eigen::Vector2d& a) {
  const double r = a.norm();
  if (r == 0.0) return Eigen::Vector2d::Zero();
  return std::pow(r, 0.5 * p - 1.0) * a;
}

PLaplaceQuantities p_laplace_quantities(double p, const Eigen::Vector2d& a,
                                        const Eigen::Vector2d& b) {
  if (p <= 1.0)
    throw std::invalid_argument("p_laplace_quantities: requires p > 1");
  const auto s_map = [p](const Eigen::Vector2d& v) -> Eigen::Vector2d {
    const double r = v.norm();
    if (r == 0.0) return Eigen::Vector2d::Zero();
    return std::pow(r, p - 2.0) * v;
  };
  PLaplaceQuantities out;
  out.f_diff_sq = (p_power_f_map(p, a) - p_power_f_map(p, b)).squaredNorm();
  out.s_pairing = (s_map(a) - s_map(b)).dot(a - b);
  return out;
}

LowOrderTerm LowOrderTerm::none() { return LowOrderTerm{}; }

LowOrderTerm LowOrderTerm::linear(P0Function f_h) {
  LowOrderTerm lo;
  lo.kind = Kind::linear;
  lo.data = std::move(f_h);
  return lo;
}

LowOrderTerm LowOrderTerm::quadratic(P0Function g_h, double alpha) {
  if (alpha <= 0.0)
    throw std::invalid_argument("LowOrderTerm::quadratic: alpha > 0");
  LowOrderTerm lo;
  lo.kind = Kind::quadratic;
  lo.data = std::move(g_h);
  lo.alpha = alpha;
  return lo;
}

LowOrderTerm LowOrderTerm::obstacle_linear(P0Function f_h) {
  LowOrderTerm lo;
  lo.kind = Kind::obstacle_linear;
  lo.data = std::move(f_h);
  return lo;
}

double LowOrderTerm::psi(int element, double s) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::linear:
      return -data.values[element] * s;
    case Kind::quadratic: {
      const double d = s - data.values[element];
      return 0.5 * alpha * d * d;
    }
    case Kind::obstacle_linear:
      // roundoff slack: barycenter values of discrete solutions sit at 0
      if (s < -1e-12) return kInf;
      return -data.values[element] * s;
  }
  return 0.0;
}

double LowOrderTerm::psi_star(int element, double t, double tol) const {
  switch (kind) {
    case Kind::none:
      return t == 0.0 ? 0.0 : (std::abs(t) <= tol ? 0.0 : kInf);
    case Kind::linear: {
      const double f = data.values[element];
      return std::abs(t + f) <= tol * (1.0 + std::abs(f)) ? 0.0 : kInf;
    }
    case Kind::quadratic: {
      const double g = data.values[element];
      return t * t / (2.0 * alpha) + g * t;
    }
    case Kind::obstacle_linear: {
      const double f = data.values[element];
      return t + f <= tol * (1.0 + std::abs(f)) ? 0.0 : kInf;
    }
  }
  return 0.0;
}

double LowOrderTerm::d_psi(int element, double s) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::linear:
      return -data.values[element];
    case Kind::quadratic:
      return alpha * (s - data.values[element]);
    case Kind::obstacle_linear:
      throw std::domain_error(
          "LowOrderTerm::d_psi: obstacle kind needs the multiplier");
  }
  return 0.0;
}

}  // namespace femdual
