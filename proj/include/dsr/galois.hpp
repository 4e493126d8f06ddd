#pragma once

#include <dsr/errors.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dsr {

using Elem = std::uint32_t;
using FMatrix = Eigen::Matrix<Elem, Eigen::Dynamic, Eigen::Dynamic>;
using FVector = Eigen::Matrix<Elem, Eigen::Dynamic, 1>;
using Rng = std::mt19937_64;

/// GF(p) for a prime p < 2^31, or GF(2^m) for 1 <= m <= 16 with a fixed
/// primitive polynomial per m. Elements are 0..q-1; in GF(2^m) the bits are
/// polynomial coefficients.
class Field {
 public:
  static Field binary(int m);
  static Field prime(std::uint32_t p);
  /// 2^m or a prime; anything else throws DomainError.
  static Field of_order(std::uint64_t q);

  std::uint64_t order() const { return order_; }
  bool is_binary() const { return binary_; }
  /// Reduction polynomial for GF(2^m), including the x^m term.
  std::uint32_t polynomial() const { return poly_; }
  std::string name() const;

  Elem add(Elem a, Elem b) const;
  Elem sub(Elem a, Elem b) const;
  Elem neg(Elem a) const;
  Elem mul(Elem a, Elem b) const;
  /// Throws DomainError on zero.
  Elem inv(Elem a) const;
  Elem div(Elem a, Elem b) const { return mul(a, inv(b)); }

  Elem random(Rng& rng) const;
  Elem random_nonzero(Rng& rng) const;
  FMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) const;

 private:
  Field() = default;

  std::uint64_t order_ = 0;
  bool binary_ = false;
  std::uint32_t poly_ = 0;
  std::vector<Elem> exp_;  // length 2(q-1), binary only
  std::vector<Elem> log_;  // length q, binary only
};

FMatrix multiply(const Field& f, const FMatrix& a, const FMatrix& b);
FMatrix concat_columns(const std::vector<FMatrix>& blocks);

/// Gaussian elimination rank.
int rank(const Field& f, FMatrix a);
/// Determinant of a square matrix.
Elem determinant(const Field& f, FMatrix a);
/// X with a X = b for square invertible a; nullopt when a is singular.
std::optional<FMatrix> solve(const Field& f, FMatrix a, FMatrix b);

std::string to_hex(Elem e, const Field& f);

}  // namespace dsr
