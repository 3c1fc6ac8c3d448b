#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>

namespace slp {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
// One 2-D real sample per row.
template <typename Scalar>
using Points2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 2, Eigen::RowMajor>;

using Vec2 = Vector2<double>;
using Mat2 = Matrix2<double>;
using Points = Points2<double>;

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

using BitMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline Vec2 to_vec2(cdouble z) { return {z.real(), z.imag()}; }
inline cdouble to_complex(const Vec2& v) { return {v.x(), v.y()}; }

}  // namespace slp
