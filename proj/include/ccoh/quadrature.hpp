#pragma once

// Quadrature rules on the unit sphere and a compensated accumulator.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccoh/error.hpp"

namespace ccoh {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

enum class SphereScheme {
  lebedev,        // octahedral Lebedev rules, order = number of nodes
  gauss_product,  // Gauss-Legendre in cos(theta) x uniform in phi, order = degree
};

inline std::string_view to_string(SphereScheme s) {
  return s == SphereScheme::lebedev ? "lebedev" : "gauss_product";
}

struct SphereRule {
  SphereScheme scheme = SphereScheme::gauss_product;
  int order = 0;
  int degree = 0;  // highest spherical-harmonic degree integrated exactly
  std::vector<Eigen::Vector3d> nodes;
  std::vector<double> weights;  // sum to 4 pi
};

inline const std::vector<int>& supported_orders(SphereScheme scheme) {
  static const std::vector<int> lebedev{6, 14, 26, 38, 50};
  static const std::vector<int> product{7, 15, 31, 63, 127, 255};
  return scheme == SphereScheme::lebedev ? lebedev : product;
}

namespace detail {

// All sign/permutation images of the Lebedev generator types.
inline std::vector<Eigen::Vector3d> octahedral_a1() {
  return {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
}

inline std::vector<Eigen::Vector3d> octahedral_a2() {
  const double a = 1.0 / std::sqrt(2.0);
  std::vector<Eigen::Vector3d> out;
  for (double s : {a, -a})
    for (double t : {a, -a}) {
      out.emplace_back(0, s, t);
      out.emplace_back(s, 0, t);
      out.emplace_back(s, t, 0);
    }
  return out;
}

inline std::vector<Eigen::Vector3d> octahedral_a3() {
  const double a = 1.0 / std::sqrt(3.0);
  std::vector<Eigen::Vector3d> out;
  for (double x : {a, -a})
    for (double y : {a, -a})
      for (double z : {a, -a}) out.emplace_back(x, y, z);
  return out;
}

// (l, l, m) with 2 l^2 + m^2 = 1: 24 points.
inline std::vector<Eigen::Vector3d> octahedral_b(double l) {
  const double m = std::sqrt(1.0 - 2.0 * l * l);
  std::vector<Eigen::Vector3d> out;
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0})
      for (double s3 : {1.0, -1.0}) {
        out.emplace_back(s1 * l, s2 * l, s3 * m);
        out.emplace_back(s1 * l, s2 * m, s3 * l);
        out.emplace_back(s1 * m, s2 * l, s3 * l);
      }
  return out;
}

// (p, q, 0) with p^2 + q^2 = 1: 24 points.
inline std::vector<Eigen::Vector3d> octahedral_c(double p) {
  const double q = std::sqrt(1.0 - p * p);
  std::vector<Eigen::Vector3d> out;
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) {
      const double a = s1 * p;
      const double b = s2 * q;
      out.emplace_back(a, b, 0);
      out.emplace_back(b, a, 0);
      out.emplace_back(a, 0, b);
      out.emplace_back(b, 0, a);
      out.emplace_back(0, a, b);
      out.emplace_back(0, b, a);
    }
  return out;
}

inline void append(SphereRule& rule, const std::vector<Eigen::Vector3d>& pts, double w) {
  for (const auto& p : pts) {
    rule.nodes.push_back(p);
    rule.weights.push_back(4.0 * std::numbers::pi * w);
  }
}

inline SphereRule lebedev_rule(int order) {
  SphereRule rule;
  rule.scheme = SphereScheme::lebedev;
  rule.order = order;
  switch (order) {
    case 6:
      rule.degree = 3;
      append(rule, octahedral_a1(), 1.0 / 6.0);
      break;
    case 14:
      rule.degree = 5;
      append(rule, octahedral_a1(), 1.0 / 15.0);
      append(rule, octahedral_a3(), 3.0 / 40.0);
      break;
    case 26:
      rule.degree = 7;
      append(rule, octahedral_a1(), 1.0 / 21.0);
      append(rule, octahedral_a2(), 4.0 / 105.0);
      append(rule, octahedral_a3(), 9.0 / 280.0);
      break;
    case 38:
      rule.degree = 9;
      append(rule, octahedral_a1(), 1.0 / 105.0);
      append(rule, octahedral_a3(), 9.0 / 280.0);
      append(rule, octahedral_c(0.4597008433809831), 1.0 / 35.0);
      break;
    case 50:
      rule.degree = 11;
      append(rule, octahedral_a1(), 4.0 / 315.0);
      append(rule, octahedral_a2(), 64.0 / 2835.0);
      append(rule, octahedral_a3(), 27.0 / 1280.0);
      append(rule, octahedral_b(0.3015113445777636), 14641.0 / 725760.0);
      break;
    default: break;
  }
  return rule;
}

// (P_n(z), P_{n-1}(z)) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double z) {
  double prev = 1.0;
  double cur = z;
  for (int k = 2; k <= n; ++k) {
    const double next = ((2.0 * k - 1.0) * z * cur - (k - 1.0) * prev) / k;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  if (n == 1) {
    w[0] = 2.0;
    return;
  }
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, pm] = legendre_pair(n, z);
      const double dz = p / (n * (z * p - pm) / (z * z - 1.0));
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const auto [p, pm] = legendre_pair(n, z);
    const double dp = n * (z * p - pm) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

inline SphereRule product_rule(int degree) {
  SphereRule rule;
  rule.scheme = SphereScheme::gauss_product;
  rule.order = degree;
  rule.degree = degree;
  const int n_theta = (degree + 1) / 2;
  const int n_phi = degree + 1;
  std::vector<double> ct;
  std::vector<double> wt;
  gauss_legendre(n_theta, ct, wt);
  const double wphi = 2.0 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double st = std::sqrt(std::max(0.0, 1.0 - ct[i] * ct[i]));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = wphi * (j + 0.5);
      rule.nodes.emplace_back(st * std::cos(phi), st * std::sin(phi), ct[i]);
      rule.weights.push_back(wt[i] * wphi);
    }
  }
  return rule;
}

}  // namespace detail

inline SphereRule sphere_quadrature(SphereScheme scheme, int order) {
  const auto& ladder = supported_orders(scheme);
  if (std::find(ladder.begin(), ladder.end(), order) == ladder.end()) {
    std::ostringstream msg;
    msg << "order " << order << " not supported by " << to_string(scheme) << "; supported:";
    for (int o : ladder) msg << ' ' << o;
    throw Error(ErrorKind::unsupported_order, msg.str());
  }
  return scheme == SphereScheme::lebedev ? detail::lebedev_rule(order)
                                         : detail::product_rule(order);
}

/// Integrate f over the unit sphere with compensated summation in node order.
template <class F>
double integrate_sphere(const SphereRule& rule, F&& f) {
  CompensatedSum sum;
  for (std::size_t n = 0; n < rule.nodes.size(); ++n) sum += rule.weights[n] * f(rule.nodes[n]);
  return sum.value();
}

}  // namespace ccoh
