#pragma once

#include <array>

#include "dpges/core.hpp"

namespace dpges {

// Quaternions are stored (w, x, y, z). Rotation construction normalizes
// internally, so stored quaternions only need to be unit within tolerance;
// gradients are taken on the raw 4-vector through the normalization.

template <typename S>
Mat3<S> quat_to_rotation(const Vec4<S>& q_raw) {
  Vec4<S> q = q_raw.normalized();
  const S w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3<S> R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

// Partials of R with respect to the normalized quaternion components.
template <typename S>
std::array<Mat3<S>, 4> rotation_jacobian_unit(const Vec4<S>& q_unit) {
  const S w = q_unit[0], x = q_unit[1], y = q_unit[2], z = q_unit[3];
  std::array<Mat3<S>, 4> d;
  d[0] << 0, -z, y,
          z, 0, -x,
          -y, x, 0;
  d[1] << 0, y, z,
          y, -2 * x, -w,
          z, w, -2 * x;
  d[2] << -2 * y, x, w,
          x, 0, z,
          -w, z, -2 * y;
  d[3] << -2 * z, -w, x,
          w, -2 * z, y,
          x, y, 0;
  for (auto& m : d) m *= S(2);
  return d;
}

// Chains dL/dR back to the raw (unnormalized) quaternion.
template <typename S>
Vec4<S> rotation_backward(const Vec4<S>& q_raw, const Mat3<S>& dL_dR) {
  const S norm = q_raw.norm();
  Vec4<S> q = q_raw / norm;
  auto d = rotation_jacobian_unit(q);
  Vec4<S> g_unit;
  for (int k = 0; k < 4; ++k) g_unit[k] = (d[k].array() * dL_dR.array()).sum();
  // d(q/|q|)/dq = (I - q q^T)/|q|
  return (g_unit - q * q.dot(g_unit)) / norm;
}

}  // namespace dpges
