#include "cocycle_lab/trig_poly.hpp"

#include <cmath>

namespace cocycle_lab {

double wrap_unit(double s) {
  double r = s - std::floor(s);
  if (r >= 1.0) r = 0.0;
  return r;
}

double wrap_centered(double s) {
  double r = s - std::floor(s + 0.5);
  return r;
}

Eigen::Vector2d wrap_torus(const Eigen::Vector2d& x) {
  return {wrap_unit(x(0)), wrap_unit(x(1))};
}

Eigen::Vector2d torus_displacement(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return {wrap_centered(b(0) - a(0)), wrap_centered(b(1) - a(1))};
}

double torus_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return torus_displacement(a, b).norm();
}

double point_distance(const Point& a, const Point& b) {
  const Eigen::Vector2d d = torus_displacement(a.x, b.x);
  const double dt = wrap_centered(b.t - a.t);
  return std::sqrt(d.squaredNorm() + dt * dt);
}

double TrigPoly::operator()(const Point& p) const {
  double v = 0.0;
  for (const auto& term : terms_) {
    const double phase =
        2.0 * M_PI * (term.k[0] * p.x(0) + term.k[1] * p.x(1) + term.k[2] * p.t);
    v += term.coef * (term.is_sin ? std::sin(phase) : std::cos(phase));
  }
  return v;
}

double TrigPoly::difference(const Point& p, const Eigen::Vector3d& d) const {
  double v = 0.0;
  for (const auto& term : terms_) {
    const double phase =
        2.0 * M_PI * (term.k[0] * p.x(0) + term.k[1] * p.x(1) + term.k[2] * p.t);
    const double delta = 2.0 * M_PI * (term.k[0] * d(0) + term.k[1] * d(1) + term.k[2] * d(2));
    const double mid = phase - 0.5 * delta;
    const double s = 2.0 * std::sin(0.5 * delta);
    v += term.coef * (term.is_sin ? std::cos(mid) * s : -std::sin(mid) * s);
  }
  return v;
}

bool TrigPoly::is_constant() const {
  for (const auto& term : terms_)
    if (term.coef != 0.0 && (term.k[0] != 0 || term.k[1] != 0 || term.k[2] != 0)) return false;
  return true;
}

bool TrigPoly::base_only() const {
  for (const auto& term : terms_)
    if (term.coef != 0.0 && term.k[2] != 0) return false;
  return true;
}

double TrigPoly::sup_bound() const {
  double s = 0.0;
  for (const auto& term : terms_) s += std::abs(term.coef);
  return s;
}

double TrigPoly::lipschitz_bound() const {
  double s = 0.0;
  for (const auto& term : terms_) {
    const double kn = std::sqrt(double(term.k[0]) * term.k[0] + double(term.k[1]) * term.k[1] +
                                double(term.k[2]) * term.k[2]);
    s += std::abs(term.coef) * 2.0 * M_PI * kn;
  }
  return s;
}

TrigPoly TrigPoly::scaled(double s) const {
  auto terms = terms_;
  for (auto& term : terms) term.coef *= s;
  return TrigPoly(std::move(terms));
}

}  // namespace cocycle_lab
