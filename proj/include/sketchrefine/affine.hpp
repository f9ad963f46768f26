#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sketchrefine/error.hpp"

namespace sketchrefine {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

using Point2d = Point2<double>;

/// 2x3 affine map [[a, b, tx], [c, d, ty]] acting on column points.
template <typename Scalar>
class Affine2 {
 public:
  using Matrix23 = Eigen::Matrix<Scalar, 2, 3>;
  using Matrix22 = Eigen::Matrix<Scalar, 2, 2>;

  static constexpr Scalar kSingularThreshold = Scalar(1e-12);

  Affine2() : m_(Matrix23::Zero()) { m_(0, 0) = m_(1, 1) = Scalar(1); }
  explicit Affine2(const Matrix23& m) : m_(m) {}
  Affine2(Scalar a, Scalar b, Scalar tx, Scalar c, Scalar d, Scalar ty) {
    m_ << a, b, tx, c, d, ty;
  }

  static Affine2 identity() { return Affine2(); }
  static Affine2 translation(Scalar tx, Scalar ty) { return {1, 0, tx, 0, 1, ty}; }
  static Affine2 translation(const Point2<Scalar>& t) { return translation(t.x(), t.y()); }
  static Affine2 scaling(Scalar sx, Scalar sy) { return {sx, 0, 0, 0, sy, 0}; }
  static Affine2 scaling(Scalar s) { return scaling(s, s); }
  /// Counter-clockwise in a y-up frame; on a y-down canvas this turns clockwise on screen.
  static Affine2 rotation(Scalar radians) {
    using std::cos;
    using std::sin;
    const Scalar c = cos(radians), s = sin(radians);
    return {c, -s, 0, s, c, 0};
  }
  static Affine2 shear(Scalar shx, Scalar shy) { return {1, shx, 0, shy, 1, 0}; }

  /// Conjugates a linear map so that it acts about `center` instead of the origin.
  static Affine2 about(const Affine2& t, const Point2<Scalar>& center) {
    return translation(center).compose(t).compose(translation(-center));
  }

  const Matrix23& matrix() const { return m_; }
  Scalar operator()(int r, int c) const { return m_(r, c); }
  Matrix22 linear() const { return m_.template leftCols<2>(); }
  Point2<Scalar> offset() const { return m_.col(2); }

  Scalar determinant() const { return m_(0, 0) * m_(1, 1) - m_(0, 1) * m_(1, 0); }
  bool invertible() const {
    using std::abs;
    return abs(determinant()) > kSingularThreshold;
  }

  Point2<Scalar> apply(const Point2<Scalar>& p) const { return linear() * p + offset(); }
  Point2<Scalar> operator*(const Point2<Scalar>& p) const { return apply(p); }

  /// Returns this ∘ inner, i.e. inner is applied first.
  Affine2 compose(const Affine2& inner) const {
    Matrix23 out;
    out.template leftCols<2>() = linear() * inner.linear();
    out.col(2) = linear() * inner.offset() + offset();
    return Affine2(out);
  }
  Affine2 operator*(const Affine2& inner) const { return compose(inner); }

  Affine2 inverse() const {
    if (!invertible()) {
      throw Error(ErrorCode::SingularTransform,
                  "affine transform is singular (det = " + std::to_string(double(determinant())) + ")");
    }
    const Scalar det = determinant();
    Matrix22 inv;
    inv << m_(1, 1) / det, -m_(0, 1) / det, -m_(1, 0) / det, m_(0, 0) / det;
    Matrix23 out;
    out.template leftCols<2>() = inv;
    out.col(2) = -inv * offset();
    return Affine2(out);
  }

  /// Entry-wise Frobenius distance of the full 2x3 matrix from [I | 0].
  Scalar identity_distance() const { return (m_ - Affine2().m_).norm(); }

  bool is_exact_identity() const { return m_ == Affine2().m_; }

  template <typename Other>
  Affine2<Other> cast() const {
    return Affine2<Other>(m_.template cast<Other>());
  }

 private:
  Matrix23 m_;
};

using Affine2d = Affine2<double>;

template <typename Scalar>
Point2<Scalar> apply_point(const Affine2<Scalar>& t, const Point2<Scalar>& p) {
  return t.apply(p);
}

template <typename Scalar>
Affine2<Scalar> compose(const Affine2<Scalar>& outer, const Affine2<Scalar>& inner) {
  return outer.compose(inner);
}

template <typename Scalar>
Affine2<Scalar> invert(const Affine2<Scalar>& t) {
  return t.inverse();
}

template <typename Scalar>
Scalar identity_distance(const Affine2<Scalar>& t) {
  return t.identity_distance();
}

}  // namespace sketchrefine
