#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <string>

#include "femdual/spaces.hpp"

namespace femdual {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A convex integrand bundle: values, conjugate, single-valued derivative
/// selections, and the scalar radial profile phi'(r)/r used by the
/// semi-implicit solvers. Indicator-type instances return +inf outside their
/// domains; infinite values are explicit, never sentinel overflow.
struct ConvexIntegrand {
  std::string name;
  std::function<double(const Eigen::Vector2d&)> phi;
  std::function<double(const Eigen::Vector2d&)> phi_star;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> d_phi;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> d_phi_star;
  /// phi'(r)/r for isotropic instances; defined at r=0 by its limit.
  std::function<double(double)> radial_ratio;
  /// True when radial_ratio is positive, non-increasing, and continuous on
  /// [0,inf), the admissibility condition of the semi-implicit iterations.
  bool flow_eligible = false;
  /// Proximal map argmin_q phi(q) + (tau/2)|q - v|^2 where closed-form.
  std::function<Eigen::Vector2d(const Eigen::Vector2d&, double)> prox;
};

/// phi(s) = |s|^p / p with conjugate |t|^q / q, q = p/(p-1).
ConvexIntegrand make_p_power(double p);

/// phi(s) = |s|_eps^p / p with |s|_eps = (|s|^2 + eps^2)^(1/2). The conjugate
/// has no closed form and is evaluated by inverting the radial derivative
/// numerically (monotone Newton/bisection to machine precision). For p <= 2
/// this is the flow-eligible regularization of the p-power.
ConvexIntegrand make_regularized_p_power(double p, double eps);

/// phi(s) = (|s|^2 + eps^2)^(1/2); conjugate -eps(1-|t|^2)^(1/2) on the
/// closed unit ball, +inf outside.
ConvexIntegrand make_regularized_modulus(double eps);

/// phi(s) = min{|s| - eps/2, |s|^2/(2 eps)}; conjugate |t|^2/(2 eps) on the
/// closed unit ball, +inf outside.
ConvexIntegrand make_truncated_modulus(double eps);

/// phi(s) = |s| with shrinkage prox; the radial profile is not eligible.
ConvexIntegrand make_modulus();

/// Indicator of the closed unit ball; conjugate is the support function |t|.
ConvexIntegrand make_unit_ball_indicator();

/// Swaps the roles of phi and phi_star (with derivatives); the radial ratio
/// is rebuilt from the new derivative.
ConvexIntegrand conjugate_of(const ConvexIntegrand& ci);

/// phi(s) + phi*(t) - s.t, nonnegative by Fenchel-Young; +inf when either
/// point lies outside its domain.
double fenchel_gap(const ConvexIntegrand& ci, const Eigen::Vector2d& s,
                   const Eigen::Vector2d& t);

/// |F(a)-F(b)|^2 and (S(a)-S(b)).(a-b) with F(a) = |a|^(p/2-1) a and
/// S(a) = |a|^(p-2) a, the natural distance pair of the p-Dirichlet energy.
struct PLaplaceQuantities {
  double f_diff_sq;
  double s_pairing;
};
PLaplaceQuantities p_laplace_quantities(double p, const Eigen::Vector2d& a,
                                        const Eigen::Vector2d& b);

Eigen::Vector2d p_power_f_map(double p, const Eigen::Vector2d& a);

/// Low order term psi_h(x, s); the x-dependence is elementwise constant.
struct LowOrderTerm {
  enum class Kind { none, linear, quadratic, obstacle_linear };
  Kind kind = Kind::none;
  P0Function data;     // f_h for linear kinds, g_h for the quadratic kind
  double alpha = 1.0;  // weight of the quadratic kind

  static LowOrderTerm none();
  static LowOrderTerm linear(P0Function f_h);
  static LowOrderTerm quadratic(P0Function g_h, double alpha);
  static LowOrderTerm obstacle_linear(P0Function f_h);

  double psi(int element, double s) const;
  /// Conjugate in the second argument; indicator kinds use `tol` to decide
  /// membership.
  double psi_star(int element, double t, double tol) const;
  /// Derivative selection in s (the obstacle kind needs the multiplier to
  /// complete it and is not differentiable here).
  double d_psi(int element, double s) const;
};

}  // namespace femdual
