#pragma once

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>
#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>

namespace dsr {

/// Exact rational scalar. Expression templates are off so that values
/// behave like plain numbers inside Eigen expressions and lambdas.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorQ = Vector<Rational>;
using MatrixQ = Matrix<Rational>;

/// Sign tests used by algorithms templated on the scalar. Rationals are
/// exact; doubles use an absolute tolerance.
template <typename Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static bool is_zero(const Rational& x) { return x == 0; }
  static bool is_positive(const Rational& x) { return x > 0; }
  static bool is_negative(const Rational& x) { return x < 0; }
  static double to_double(const Rational& x) { return x.convert_to<double>(); }
};

template <>
struct ScalarTraits<double> {
  static constexpr double kEps = 1e-9;
  static bool is_zero(double x) { return std::abs(x) <= kEps; }
  static bool is_positive(double x) { return x > kEps; }
  static bool is_negative(double x) { return x < -kEps; }
  static double to_double(double x) { return x; }
};

template <typename Scalar>
Scalar from_rational(const Rational& q) {
  if constexpr (std::is_same_v<Scalar, Rational>) {
    return q;
  } else {
    return q.convert_to<Scalar>();
  }
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/// Exact value of a finite double.
inline Rational exact(double x) { return Rational(x); }

/// Parses "3", "-7/2" or a decimal like "0.25" exactly.
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& q);

}  // namespace dsr
