#pragma once

#include "dpges/core.hpp"

namespace dpges {

// Real spherical harmonics up to degree 3, same basis and ordering as the
// common splatting rasterizers. Colors are plain linear combinations of the
// coefficients (no offset, no clamp); exporters clamp at the very end.

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

namespace shc {
constexpr double C0 = 0.28209479177387814;
constexpr double C1 = 0.4886025119029199;
constexpr double C2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double C3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};
}  // namespace shc

// Basis values for a unit direction; out must hold sh_coeff_count(degree).
template <typename S>
void sh_basis(int degree, const Vec3<S>& d, S* out) {
  const S x = d[0], y = d[1], z = d[2];
  out[0] = S(shc::C0);
  if (degree < 1) return;
  out[1] = S(-shc::C1) * y;
  out[2] = S(shc::C1) * z;
  out[3] = S(-shc::C1) * x;
  if (degree < 2) return;
  const S xx = x * x, yy = y * y, zz = z * z;
  out[4] = S(shc::C2[0]) * x * y;
  out[5] = S(shc::C2[1]) * y * z;
  out[6] = S(shc::C2[2]) * (2 * zz - xx - yy);
  out[7] = S(shc::C2[3]) * x * z;
  out[8] = S(shc::C2[4]) * (xx - yy);
  if (degree < 3) return;
  out[9] = S(shc::C3[0]) * y * (3 * xx - yy);
  out[10] = S(shc::C3[1]) * x * y * z;
  out[11] = S(shc::C3[2]) * y * (4 * zz - xx - yy);
  out[12] = S(shc::C3[3]) * z * (2 * zz - 3 * xx - 3 * yy);
  out[13] = S(shc::C3[4]) * x * (4 * zz - xx - yy);
  out[14] = S(shc::C3[5]) * z * (xx - yy);
  out[15] = S(shc::C3[6]) * x * (xx - 3 * yy);
}

// Unconstrained partials of each basis value with respect to (x, y, z).
template <typename S>
void sh_basis_gradient(int degree, const Vec3<S>& d, Vec3<S>* out) {
  const S x = d[0], y = d[1], z = d[2];
  out[0].setZero();
  if (degree < 1) return;
  out[1] = Vec3<S>(0, -shc::C1, 0);
  out[2] = Vec3<S>(0, 0, shc::C1);
  out[3] = Vec3<S>(-shc::C1, 0, 0);
  if (degree < 2) return;
  out[4] = S(shc::C2[0]) * Vec3<S>(y, x, 0);
  out[5] = S(shc::C2[1]) * Vec3<S>(0, z, y);
  out[6] = S(shc::C2[2]) * Vec3<S>(-2 * x, -2 * y, 4 * z);
  out[7] = S(shc::C2[3]) * Vec3<S>(z, 0, x);
  out[8] = S(shc::C2[4]) * Vec3<S>(2 * x, -2 * y, 0);
  if (degree < 3) return;
  out[9] = S(shc::C3[0]) * Vec3<S>(6 * x * y, 3 * x * x - 3 * y * y, 0);
  out[10] = S(shc::C3[1]) * Vec3<S>(y * z, x * z, x * y);
  out[11] = S(shc::C3[2]) * Vec3<S>(-2 * x * y, 4 * z * z - x * x - 3 * y * y, 8 * y * z);
  out[12] = S(shc::C3[3]) * Vec3<S>(-6 * x * z, -6 * y * z, 6 * z * z - 3 * x * x - 3 * y * y);
  out[13] = S(shc::C3[4]) * Vec3<S>(4 * z * z - 3 * x * x - y * y, -2 * x * y, 8 * x * z);
  out[14] = S(shc::C3[5]) * Vec3<S>(2 * x * z, -2 * y * z, x * x - y * y);
  out[15] = S(shc::C3[6]) * Vec3<S>(3 * x * x - 3 * y * y, -6 * x * y, 0);
}

// coeffs is 3 x K (channel rows, coefficient columns).
template <typename S>
Vec3<S> sh_eval(int degree, const Mat3X<S>& coeffs, const Vec3<S>& dir) {
  S basis[16];
  sh_basis(degree, dir, basis);
  const int k = sh_coeff_count(degree);
  Vec3<S> c = Vec3<S>::Zero();
  for (int i = 0; i < k; ++i) c += coeffs.col(i) * basis[i];
  return c;
}

struct ShBackwardResult {
  Eigen::Matrix<double, 3, Eigen::Dynamic> d_coeffs;
  Vec3<double> d_dir;
};

// Backward of sh_eval for a given dL/dcolor.
template <typename S>
void sh_eval_backward(int degree, const Mat3X<S>& coeffs, const Vec3<S>& dir,
                      const Vec3<S>& dL_dcolor, Mat3X<S>& dL_dcoeffs, Vec3<S>& dL_ddir) {
  S basis[16];
  Vec3<S> basis_grad[16];
  sh_basis(degree, dir, basis);
  sh_basis_gradient(degree, dir, basis_grad);
  const int k = sh_coeff_count(degree);
  dL_ddir.setZero();
  for (int i = 0; i < k; ++i) {
    dL_dcoeffs.col(i) += dL_dcolor * basis[i];
    dL_ddir += basis_grad[i] * coeffs.col(i).dot(dL_dcolor);
  }
}

}  // namespace dpges
