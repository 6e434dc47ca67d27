#include "pdr/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pdr {

namespace {
constexpr double kSmallAngle = 1e-8;
constexpr double kDegenerateHeadingSpeed = 1e-3;
}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return S;
}

Rotation exp_so3(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 W = skew(w);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  const double a = std::sin(theta) / theta;
  const double half_sin = std::sin(0.5 * theta);
  const double b = 2.0 * half_sin * half_sin / (theta * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

Vec3 log_so3(const Rotation& R) {
  const Vec3 vee(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double sin_theta = 0.5 * vee.norm();
  const double cos_theta = 0.5 * (R.trace() - 1.0);
  // atan2 keeps precision at small angles where acos does not
  const double theta = std::atan2(sin_theta, cos_theta);
  if (theta > std::numbers::pi - 1e-6) {
    throw GeometryError("log_so3: rotation angle too close to pi");
  }
  if (theta < kSmallAngle) {
    return 0.5 * vee;
  }
  return (theta / (2.0 * sin_theta)) * vee;
}

Mat3 left_jacobian_so3(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 W = skew(w);
  if (theta < 1e-4) {
    return Mat3::Identity() + 0.5 * W + W * W / 6.0;
  }
  const double t2 = theta * theta;
  const double half_sin = std::sin(0.5 * theta);
  const double a = 2.0 * half_sin * half_sin / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() + a * W + b * W * W;
}

Rotation project_to_so3(const Mat3& M) {
  if (!(M.determinant() > 0.0)) {
    throw GeometryError("project_to_so3: determinant must be positive");
  }
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Rotation R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    R = U * svd.matrixV().transpose();
  }
  return R;
}

Rotation heading_rotation(const Vec3& v0) {
  const double planar = std::hypot(v0.x(), v0.y());
  if (planar < kDegenerateHeadingSpeed) {
    return Rotation::Identity();
  }
  const double c = v0.x() / planar;
  const double s = v0.y() / planar;
  Rotation R;
  R << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return R;
}

double orthonormality_error(const Mat3& R) {
  return (R.transpose() * R - Mat3::Identity()).norm();
}

Quat to_quaternion(const Rotation& R) {
  Quat q(R);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() *= -1.0;
  }
  return q;
}

Rotation to_rotation(const Quat& q) { return q.normalized().toRotationMatrix(); }

}  // namespace pdr
