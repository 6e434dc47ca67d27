#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>

namespace pdr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rotation = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Raised for inputs outside an SO(3) routine's valid domain.
class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cross-product matrix: skew(v) * u == v.cross(u).
Mat3 skew(const Vec3& v);

/// Rodrigues exponential of a rotation vector (rad).
Rotation exp_so3(const Vec3& w);

/// Inverse of exp_so3. Throws GeometryError when the angle is within 1e-6 of pi.
Vec3 log_so3(const Rotation& R);

/// Left Jacobian of SO(3): exp(w + d) ~= exp(J_l(w) d) exp(w).
Mat3 left_jacobian_so3(const Vec3& w);

/// Nearest rotation in Frobenius norm (polar decomposition).
/// Throws GeometryError if det(M) <= 0.
Rotation project_to_so3(const Mat3& M);

/// Yaw-only rotation whose x axis follows the planar direction of v0, so that
/// R^T v0 = [|v0_xy|, 0, v0_z]. Returns identity when |v0_xy| < 1e-3 m/s.
Rotation heading_rotation(const Vec3& v0);

/// Frobenius distance of R from the orthogonal group, ||R^T R - I||_F.
double orthonormality_error(const Mat3& R);

Quat to_quaternion(const Rotation& R);
Rotation to_rotation(const Quat& q);

}  // namespace pdr
