#pragma once

// Long-wavelength acoustic phonons of a cubic host crystal and the
// direction-averaged phonon scattering cross-section of the defect.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "ccoh/constants.hpp"
#include "ccoh/error.hpp"
#include "ccoh/model.hpp"
#include "ccoh/quadrature.hpp"

namespace ccoh {

/// Rows are the defect-frame axes (x, y, z) in crystal coordinates.
inline Eigen::Matrix3d default_defect_frame() {
  Eigen::Matrix3d r;
  r.row(0) = Eigen::Vector3d(1, 1, -2).normalized();
  r.row(1) = Eigen::Vector3d(-1, 1, 0).normalized();
  r.row(2) = Eigen::Vector3d(1, 1, 1).normalized();
  return r;
}

struct MaterialParameters {
  std::string name = "diamond";
  double density = 3512.0;  // kg/m^3
  double c11 = 1079e9;      // Pa
  double c12 = 124e9;
  double c44 = 578e9;
  Eigen::Matrix3d defect_frame = default_defect_frame();

  void validate() const {
    if (!(density > 0.0) || !std::isfinite(density)) {
      throw Error(ErrorKind::invalid_parameter, "density must be positive");
    }
    if (!(c11 > std::abs(c12)) || !(c44 > 0.0) || !(c11 + 2.0 * c12 > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "cubic stiffness violates elastic stability");
    }
    validate_frame(defect_frame);
  }

  static void validate_frame(const Eigen::Matrix3d& r) {
    const double orth = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!r.allFinite() || orth > 1e-12 || std::abs(r.determinant() - 1.0) > 1e-12) {
      throw Error(ErrorKind::invalid_frame, "defect frame must be a proper rotation");
    }
  }
};

/// Full rank-4 stiffness tensor c_ijkl (Pa).
class StiffnessTensor {
 public:
  double operator()(int i, int j, int k, int l) const { return c_[index(i, j, k, l)]; }
  double& operator()(int i, int j, int k, int l) { return c_[index(i, j, k, l)]; }

  static StiffnessTensor cubic(double c11, double c12, double c44) {
    StiffnessTensor t;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double v = 0.0;
            if (i == j && k == l) v += (i == k) ? c11 : c12;
            if (i != j && ((i == k && j == l) || (i == l && j == k))) v += c44;
            t(i, j, k, l) = v;
          }
    return t;
  }

  /// c'_ijkl = R_ia R_jb R_kc R_ld c_abcd, done one index at a time.
  StiffnessTensor rotated(const Eigen::Matrix3d& r) const {
    StiffnessTensor a = *this;
    for (int slot = 0; slot < 4; ++slot) {
      StiffnessTensor b;
      for (int n = 0; n < 81; ++n) {
        std::array<int, 4> idx{n / 27, (n / 9) % 3, (n / 3) % 3, n % 3};
        double sum = 0.0;
        const int free = idx[slot];
        for (int m = 0; m < 3; ++m) {
          idx[slot] = m;
          sum += r(free, m) * a(idx[0], idx[1], idx[2], idx[3]);
        }
        idx[slot] = free;
        b(idx[0], idx[1], idx[2], idx[3]) = sum;
      }
      a = b;
    }
    return a;
  }

 private:
  static int index(int i, int j, int k, int l) { return ((i * 3 + j) * 3 + k) * 3 + l; }
  std::array<double, 81> c_{};
};

/// Cubic stiffness expressed in the defect frame.
inline StiffnessTensor rotate_stiffness(const MaterialParameters& material) {
  material.validate();
  return StiffnessTensor::cubic(material.c11, material.c12, material.c44)
      .rotated(material.defect_frame);
}

struct AcousticModeSet {
  std::array<double, 3> speeds{};  // m/s, ascending
  Eigen::Matrix3d polarizations = Eigen::Matrix3d::Identity();  // column m
};

inline Eigen::Matrix3d christoffel(const StiffnessTensor& c, double density,
                                   const Eigen::Vector3d& k) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) {
      double sum = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int kk = 0; kk < 3; ++kk) sum += c(i, j, kk, l) * k(j) * k(kk);
      m(i, l) = sum / density;
    }
  return 0.5 * (m + m.transpose());
}

inline AcousticModeSet acoustic_modes(const StiffnessTensor& stiffness, double density,
                                      const Eigen::Vector3d& direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-12) {
    throw Error(ErrorKind::invalid_parameter, "propagation direction must be a unit vector");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(
      christoffel(stiffness, density, direction));
  AcousticModeSet modes;
  for (int m = 0; m < 3; ++m) {
    const double v2 = solver.eigenvalues()(m);
    if (!(v2 > 0.0)) {
      throw Error(ErrorKind::elastic_instability, "non-positive Christoffel eigenvalue");
    }
    modes.speeds[m] = std::sqrt(v2);
  }
  modes.polarizations = solver.eigenvectors();
  return modes;
}

/// Strain susceptibility tensors D_Egx, D_Egy in rad/s per unit strain.
inline std::array<Eigen::Matrix3d, 2> strain_susceptibility(const DefectParameters& defect) {
  const double d = phz_to_angular(defect.d_phz);
  const double f = phz_to_angular(defect.f_phz);
  Eigen::Matrix3d dx;
  dx << d, 0, f / 2, 0, -d, 0, f / 2, 0, 0;
  Eigen::Matrix3d dy;
  dy << 0, -d, 0, -d, 0, f / 2, 0, f / 2, 0;
  return {dx, dy};
}

/// Mode-summed cross-section integrand for one direction, per R (s^2 / sr).
inline std::array<double, 2> cross_section_integrand(const std::array<Eigen::Matrix3d, 2>& d,
                                                     const StiffnessTensor& stiffness,
                                                     double density, const Eigen::Vector3d& k) {
  const AcousticModeSet modes = acoustic_modes(stiffness, density, k);
  constexpr double pi3 = std::numbers::pi * std::numbers::pi * std::numbers::pi;
  std::array<double, 2> out{0.0, 0.0};
  for (int m = 0; m < 3; ++m) {
    const double c = modes.speeds[m];
    const double c5 = c * c * c * c * c;
    const double denom = 16.0 * pi3 * density * c5;
    for (int r = 0; r < 2; ++r) {
      const double amp = k.dot(d[r] * modes.polarizations.col(m));
      out[r] += kHbar * amp * amp / denom;
    }
  }
  return out;
}

struct CrossSections {
  double chi_x = 0.0;  // s^2
  double chi_y = 0.0;
  double chi = 0.0;  // mean
  SphereScheme scheme = SphereScheme::gauss_product;
  int quadrature_order = 0;
  bool converged = false;
  double delta = 0.0;  // relative change from the previous ladder order
};

struct QuadratureOptions {
  SphereScheme scheme = SphereScheme::gauss_product;
  std::optional<int> order;  // fixed order; otherwise walk the ladder
  double tolerance = 1e-6;
};

inline std::array<double, 2> cross_sections_at(const DefectParameters& defect,
                                               const StiffnessTensor& stiffness, double density,
                                               const SphereRule& rule) {
  const auto d = strain_susceptibility(defect);
  CompensatedSum sx;
  CompensatedSum sy;
  for (std::size_t n = 0; n < rule.nodes.size(); ++n) {
    const auto v = cross_section_integrand(d, stiffness, density, rule.nodes[n]);
    sx += rule.weights[n] * v[0];
    sy += rule.weights[n] * v[1];
  }
  return {sx.value(), sy.value()};
}

namespace detail {

inline double relative_change(double prev, double cur) {
  const double scale = std::max(std::abs(prev), std::abs(cur));
  return scale == 0.0 ? 0.0 : std::abs(cur - prev) / scale;
}

}  // namespace detail

/// chi_R = sum_m oint hbar (D_R k q_m)^2 / (16 pi^3 rho c_m^5) dOmega.
///
/// Without a fixed order the ladder is walked until successive orders agree
/// to `tolerance` (relative, on both components).
inline CrossSections scattering_cross_section(const DefectParameters& defect,
                                              const MaterialParameters& material,
                                              const QuadratureOptions& options = {}) {
  defect.validate();
  const StiffnessTensor stiffness = rotate_stiffness(material);
  const auto& ladder = supported_orders(options.scheme);

  auto eval = [&](int order) {
    return cross_sections_at(defect, stiffness, material.density,
                             sphere_quadrature(options.scheme, order));
  };
  auto finish = [&](int order, const std::array<double, 2>& prev,
                    const std::array<double, 2>& cur) {
    CrossSections out;
    out.chi_x = cur[0];
    out.chi_y = cur[1];
    out.chi = 0.5 * (cur[0] + cur[1]);
    out.scheme = options.scheme;
    out.quadrature_order = order;
    out.delta = std::max(detail::relative_change(prev[0], cur[0]),
                         detail::relative_change(prev[1], cur[1]));
    out.converged = out.delta < options.tolerance;
    return out;
  };

  if (options.order) {
    const int order = *options.order;
    const auto cur = eval(order);  // validates the order
    const auto it = std::find(ladder.begin(), ladder.end(), order);
    const auto prev = it == ladder.begin() ? cur : eval(*(it - 1));
    auto out = finish(order, prev, cur);
    if (it == ladder.begin()) {
      out.converged = false;
      out.delta = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  }

  auto prev = eval(ladder.front());
  for (std::size_t n = 1; n < ladder.size(); ++n) {
    const auto cur = eval(ladder[n]);
    auto out = finish(ladder[n], prev, cur);
    if (out.converged) return out;
    prev = cur;
  }
  std::ostringstream msg;
  msg.precision(17);
  msg << "cross-section not converged at order " << ladder.back() << "; last values "
      << prev[0] << ", " << prev[1];
  throw Error(ErrorKind::not_converged, msg.str());
}

struct FrameSensitivity {
  std::vector<double> azimuth_deg;
  std::vector<double> chi;
  double min = 0.0;
  double max = 0.0;
  double relative_spread = 0.0;  // (max - min) / mean
};

/// Spread of chi when the defect x/y axes are rotated about the D3d axis.
inline FrameSensitivity frame_sensitivity(const DefectParameters& defect,
                                          const MaterialParameters& material, int samples = 12,
                                          const QuadratureOptions& options = {}) {
  FrameSensitivity out;
  out.min = std::numeric_limits<double>::infinity();
  out.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double psi = 120.0 * s / samples;
    const Eigen::Matrix3d spin =
        Eigen::AngleAxisd(psi * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ())
            .toRotationMatrix();
    MaterialParameters rotated = material;
    rotated.defect_frame = spin.transpose() * material.defect_frame;
    const double chi = scattering_cross_section(defect, rotated, options).chi;
    out.azimuth_deg.push_back(psi);
    out.chi.push_back(chi);
    out.min = std::min(out.min, chi);
    out.max = std::max(out.max, chi);
    sum += chi;
  }
  const double mean = sum / samples;
  out.relative_spread = mean == 0.0 ? 0.0 : (out.max - out.min) / mean;
  return out;
}

}  // namespace ccoh
