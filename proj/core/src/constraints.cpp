#include "optgrowth/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>

namespace optgrowth {
namespace {

// Per-element coordinates in which the weighted metric is isotropic:
// t = (g1 + g2)/2, d = (g1 - g2)/2, S = sqrt(2w) g3/2. The squared metric is
// 2 (t^2 + d^2 + S^2) and the PSD cone reads t >= |(d, k S)| with
// k = 1/sqrt(2w).
struct ConePoint {
  double t = 0.0;
  double d = 0.0;
  double s = 0.0;
};

ConePoint to_cone(const Eigen::Vector3d& g, double w) {
  return {0.5 * (g[0] + g[1]), 0.5 * (g[0] - g[1]), std::sqrt(2.0 * w) * 0.5 * g[2]};
}

Eigen::Vector3d from_cone(const ConePoint& p, double w) {
  return {p.t + p.d, p.t - p.d, 2.0 * p.s / std::sqrt(2.0 * w)};
}

template <class F>
double solve_monotone(F f, double lo, double hi) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw NumericalError("projection root is not bracketed");
  boost::uintmax_t max_iter = 300;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                    boost::math::tools::eps_tolerance<double>(), max_iter);
  return 0.5 * (r.first + r.second);
}

// Nearest point of {t >= |(d, k s)|}.
ConePoint project_cone(const ConePoint& p, double k) {
  const double inner = std::hypot(p.d, k * p.s);
  if (p.t >= inner) return p;
  if (-p.t >= std::hypot(p.d, p.s / k)) return {};
  if (k == 1.0) {
    const double r = 0.5 * (p.t + inner);
    return {r, r * p.d / inner, r * p.s / inner};
  }
  // Boundary point: y = y0 / (1 + rho m^2) with m = (1, k) and
  // t = |M y| = t0 / (1 - rho).
  auto y_of = [&](double rho) { return ConePoint{0.0, p.d / (1.0 + rho), p.s / (1.0 + rho * k * k)}; };
  auto norm_of = [&](double rho) {
    const auto y = y_of(rho);
    return std::hypot(y.d, k * y.s);
  };
  double rho = 1.0;
  if (p.t > 0.0) {
    rho = solve_monotone([&](double r) { return (1.0 - r) * norm_of(r) - p.t; }, 0.0, 1.0);
  } else if (p.t < 0.0) {
    auto f = [&](double r) { return (r - 1.0) * norm_of(r) + p.t; };
    double hi = 2.0;
    while (f(hi) < 0.0) {
      hi *= 2.0;
      if (hi > 1e300) throw NumericalError("cone projection: cannot bracket multiplier");
    }
    rho = solve_monotone(f, 1.0, hi);
  }
  auto y = y_of(rho);
  y.t = norm_of(rho);
  return y;
}

struct SliceProjection {
  ConePoint point;
  double multiplier = 0.0;  // ellipse multiplier mu' (infinite when t == 0)
};

// Nearest point of the cone slice {t = t_fixed}: an ellipse in (d, s).
SliceProjection project_slice(const ConePoint& p, double t_fixed, double k) {
  SliceProjection out;
  out.point.t = t_fixed;
  const double inner = std::hypot(p.d, k * p.s);
  if (inner <= t_fixed) {
    out.point.d = p.d;
    out.point.s = p.s;
    return out;
  }
  if (t_fixed <= 0.0) {
    out.multiplier = std::numeric_limits<double>::infinity();
    return out;
  }
  double mu = 0.0;
  if (k == 1.0) {
    mu = inner / t_fixed - 1.0;
  } else {
    auto f = [&](double m) { return std::hypot(p.d / (1.0 + m), k * p.s / (1.0 + m * k * k)) - t_fixed; };
    const double kmin = std::min(1.0, k * k);
    mu = solve_monotone(f, 0.0, inner / (t_fixed * kmin));
  }
  out.point.d = p.d / (1.0 + mu);
  out.point.s = p.s / (1.0 + mu * k * k);
  out.multiplier = mu;
  return out;
}

}  // namespace

Vector MassBalance::element_targets(Index num_elements) const {
  if (local_gamma.size() == 0) return Vector::Constant(num_elements, gamma);
  if (local_gamma.size() != num_elements) {
    throw ValidationError("balance: local gamma has wrong length");
  }
  return local_gamma;
}

void MassBalance::validate(Index num_elements) const {
  if (!std::isfinite(gamma)) throw ValidationError("balance.gamma must be finite");
  if (local_gamma.size() != 0 && local_gamma.size() != num_elements) {
    throw ValidationError("balance: local gamma has wrong length");
  }
  const double lowest = local_gamma.size() ? std::min(gamma, local_gamma.minCoeff()) : gamma;
  if (relation == BalanceRelation::equality && lowest < 0.0) {
    throw ValidationError("balance.gamma must be non-negative with an equality balance (resorption unsupported)");
  }
}

Vector penalty_metric(const AssembledSystem& sys, ShearWeight weight) {
  Vector m = sys.penalty_diag;
  const double w = shear_weight_factor(weight);
  for (Index e = 0; e < sys.num_elements(); ++e) m[3 * e + 2] *= w;
  return m;
}

double lambda_min_2x2(const Eigen::Vector3d& g) {
  return 0.5 * (g[0] + g[1]) - std::hypot(0.5 * (g[0] - g[1]), 0.5 * g[2]);
}

Vector c_vector(const GrowthField& increment) {
  Vector c(increment.num_elements());
  for (Index e = 0; e < c.size(); ++e) c[e] = -lambda_min_2x2(increment.element(e));
  return c;
}

double max_psd_violation(const GrowthField& increment) {
  if (increment.num_elements() == 0) return 0.0;
  return std::max(0.0, c_vector(increment).maxCoeff());
}

Eigen::Vector3d project_psd(const Eigen::Vector3d& g) {
  Eigen::Matrix2d m;
  m << g[0], 0.5 * g[2], 0.5 * g[2], g[1];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m);
  const Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::Matrix2d p = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  return {p(0, 0), p(1, 1), p(0, 1) + p(1, 0)};
}

Eigen::Vector3d project_psd_weighted(const Eigen::Vector3d& g, double shear_factor) {
  if (!(shear_factor > 0.0)) throw ValidationError("shear weight must be positive");
  const double k = 1.0 / std::sqrt(2.0 * shear_factor);
  return from_cone(project_cone(to_cone(g, shear_factor), k), shear_factor);
}

FeasibleProjection project_feasible_increment(const GrowthField& increment, const MassBalance& balance,
                                              const AssembledSystem& sys, ShearWeight weight) {
  const Index ne = sys.num_elements();
  if (increment.num_elements() != ne) throw ValidationError("projection: size mismatch");
  if (!increment.all_finite()) throw ValidationError("projection: non-finite increment");
  balance.validate(ne);

  const double w = shear_weight_factor(weight);
  const double k = 1.0 / std::sqrt(2.0 * w);
  std::vector<ConePoint> z(static_cast<std::size_t>(ne));
  for (Index e = 0; e < ne; ++e) z[static_cast<std::size_t>(e)] = to_cone(increment.element(e), w);

  FeasibleProjection out{GrowthField(ne), Vector()};

  if (balance.mode == BalanceMode::local) {
    const Vector targets = balance.element_targets(ne);
    out.multipliers = Vector::Zero(ne);
    for (Index e = 0; e < ne; ++e) {
      const ConePoint& p = z[static_cast<std::size_t>(e)];
      const double t_target = 0.5 * targets[e];
      if (balance.relation == BalanceRelation::inequality) {
        const ConePoint free = project_cone(p, k);
        if (free.t <= t_target) {
          out.increment.set_element(e, from_cone(free, w));
          continue;
        }
      }
      if (t_target < 0.0) throw ValidationError("projection: infeasible local balance (negative trace target)");
      const SliceProjection sp = project_slice(p, t_target, k);
      out.increment.set_element(e, from_cone(sp.point, w));
      // Multiplier nu_e such that the cone projection of the t-shifted input
      // reproduces this point: t_shift = nu / (2 |T_e|).
      const double area = sys.element_areas[e];
      const double t_pre = std::isinf(sp.multiplier) ? -std::hypot(p.d, p.s / k)
                                                      : t_target * (1.0 - sp.multiplier);
      out.multipliers[e] = 2.0 * area * (p.t - t_pre);
    }
    return out;
  }

  // Global: x(nu) = P_K(z - nu M^{-1} a); M^{-1} a shifts t by 1/2 in every
  // element, and a . x = sum_e 2 |T_e| t_e.
  const double target = balance.global_target(sys);
  std::vector<ConePoint> x(static_cast<std::size_t>(ne));
  auto mass_at = [&](double nu) {
    double m = 0.0;
    for (Index e = 0; e < ne; ++e) {
      ConePoint p = z[static_cast<std::size_t>(e)];
      p.t -= 0.5 * nu;
      x[static_cast<std::size_t>(e)] = project_cone(p, k);
      m += 2.0 * sys.element_areas[e] * x[static_cast<std::size_t>(e)].t;
    }
    return m;
  };

  double nu = 0.0;
  const double m0 = mass_at(0.0);
  const bool satisfied = balance.relation == BalanceRelation::inequality
                             ? m0 <= target
                             : std::abs(m0 - target) <= 1e-15 * std::max(1.0, std::abs(target));
  if (!satisfied) {
    if (target < 0.0) throw ValidationError("projection: infeasible global balance (negative target)");
    auto f = [&](double v) { return mass_at(v) - target; };
    double lo = 0.0, hi = 0.0;
    double step = 1.0;
    if (m0 > target) {
      while (f(hi) > 0.0) {
        lo = hi;
        hi += step;
        step *= 2.0;
        if (step > 1e300) throw NumericalError("projection: cannot bracket global multiplier");
      }
    } else {
      while (f(lo) < 0.0) {
        hi = lo;
        lo -= step;
        step *= 2.0;
        if (step > 1e300) throw NumericalError("projection: cannot bracket global multiplier");
      }
    }
    nu = solve_monotone(f, lo, hi);
  }
  mass_at(nu);
  for (Index e = 0; e < ne; ++e) out.increment.set_element(e, from_cone(x[static_cast<std::size_t>(e)], w));
  out.multipliers = Vector::Constant(1, nu);
  return out;
}

GrowthField project_feasible_increment_dykstra(const GrowthField& increment, const MassBalance& balance,
                                               const AssembledSystem& sys, ShearWeight weight,
                                               int max_cycles, double tolerance) {
  const Index ne = sys.num_elements();
  if (increment.num_elements() != ne) throw ValidationError("projection: size mismatch");
  balance.validate(ne);
  const double w = shear_weight_factor(weight);
  const Vector metric = penalty_metric(sys, weight);
  const Vector minv_a = sys.trace_weights.cwiseQuotient(metric);
  const double a_minv_a = sys.trace_weights.dot(minv_a);
  const Vector targets = balance.element_targets(ne);
  const bool ineq = balance.relation == BalanceRelation::inequality;

  auto project_balance = [&](const Vector& v) {
    Vector r = v;
    if (balance.mode == BalanceMode::global) {
      const double res = sys.trace_weights.dot(v) - balance.global_target(sys);
      if (!ineq || res > 0.0) r -= (res / a_minv_a) * minv_a;
    } else {
      for (Index e = 0; e < ne; ++e) {
        const double res = v[3 * e] + v[3 * e + 1] - targets[e];
        if (!ineq || res > 0.0) {
          r[3 * e] -= 0.5 * res;
          r[3 * e + 1] -= 0.5 * res;
        }
      }
    }
    return r;
  };
  auto project_cones = [&](const Vector& v) {
    Vector r(v.size());
    for (Index e = 0; e < ne; ++e) r.segment<3>(3 * e) = project_psd_weighted(v.segment<3>(3 * e), w);
    return r;
  };
  auto mnorm = [&](const Vector& v) { return std::sqrt(v.dot(metric.cwiseProduct(v))); };

  Vector x = increment.values();
  Vector p = Vector::Zero(x.size());
  Vector q = Vector::Zero(x.size());
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    const Vector y = project_balance(x + p);
    p = x + p - y;
    const Vector x_new = project_cones(y + q);
    q = y + q - x_new;
    const double change = mnorm(x_new - x);
    x = x_new;
    if (change <= tolerance * (1.0 + mnorm(x))) return GrowthField(x);
  }
  throw NumericalError("Dykstra projection did not converge in " + std::to_string(max_cycles) + " cycles");
}

double mass_balance_violation(const GrowthField& increment, const MassBalance& balance,
                              const AssembledSystem& sys) {
  const bool ineq = balance.relation == BalanceRelation::inequality;
  auto measure = [ineq](double r) { return ineq ? std::max(0.0, r) : std::abs(r); };
  if (balance.mode == BalanceMode::global) {
    return measure(sys.trace_weights.dot(increment.values()) - balance.global_target(sys));
  }
  const Vector targets = balance.element_targets(sys.num_elements());
  const Vector traces = sys.trace_op * increment.values();
  double worst = 0.0;
  for (Index e = 0; e < traces.size(); ++e) worst = std::max(worst, measure(traces[e] - targets[e]));
  return worst;
}

}  // namespace optgrowth
