#include <dsr/galois.hpp>

#include <array>
#include <bit>
#include <sstream>

namespace dsr {

namespace {

// Primitive polynomials for m = 1..16, x^m term included.
constexpr std::array<std::uint32_t, 17> kPrimitive = {
    0,      0x3,    0x7,    0xB,    0x13,   0x25,   0x43,   0x89,   0x11D,
    0x211,  0x409,  0x805,  0x1053, 0x201B, 0x4443, 0x8003, 0x1100B};

bool is_prime(std::uint64_t p) {
  if (p < 2) return false;
  for (std::uint64_t d = 2; d * d <= p; ++d) {
    if (p % d == 0) return false;
  }
  return true;
}

}  // namespace

Field Field::binary(int m) {
  if (m < 1 || m > 16) throw DomainError("GF(2^m) supported for 1 <= m <= 16");
  Field f;
  f.binary_ = true;
  f.order_ = std::uint64_t{1} << m;
  f.poly_ = kPrimitive[static_cast<std::size_t>(m)];
  const auto q = static_cast<std::size_t>(f.order_);
  f.exp_.resize(2 * (q - 1) + 1);
  f.log_.assign(q, 0);
  std::uint32_t x = 1;
  for (std::size_t i = 0; i + 1 < q; ++i) {
    f.exp_[i] = x;
    f.log_[x] = static_cast<Elem>(i);
    x <<= 1;
    if (x & f.order_) x ^= f.poly_;
  }
  for (std::size_t i = q - 1; i < f.exp_.size(); ++i) f.exp_[i] = f.exp_[i - (q - 1)];
  return f;
}

Field Field::prime(std::uint32_t p) {
  if (!is_prime(p) || p >= (std::uint32_t{1} << 31)) throw DomainError("GF(p) needs a prime p < 2^31");
  Field f;
  f.order_ = p;
  return f;
}

Field Field::of_order(std::uint64_t q) {
  if (q >= 2 && std::has_single_bit(q)) return binary(std::countr_zero(q));
  if (q < (std::uint64_t{1} << 31)) return prime(static_cast<std::uint32_t>(q));
  throw DomainError("unsupported field order " + std::to_string(q));
}

std::string Field::name() const {
  if (binary_) return "GF(2^" + std::to_string(std::countr_zero(order_)) + ")";
  return "GF(" + std::to_string(order_) + ")";
}

Elem Field::add(Elem a, Elem b) const {
  if (binary_) return a ^ b;
  return static_cast<Elem>((std::uint64_t{a} + b) % order_);
}

Elem Field::sub(Elem a, Elem b) const { return add(a, neg(b)); }

Elem Field::neg(Elem a) const {
  if (binary_ || a == 0) return a;
  return static_cast<Elem>(order_ - a);
}

Elem Field::mul(Elem a, Elem b) const {
  if (a == 0 || b == 0) return 0;
  if (binary_) return exp_[log_[a] + log_[b]];
  return static_cast<Elem>((std::uint64_t{a} * b) % order_);
}

Elem Field::inv(Elem a) const {
  if (a == 0) throw DomainError("inverse of zero");
  if (binary_) return exp_[(order_ - 1 - log_[a]) % (order_ - 1)];
  // Fermat: a^(p-2).
  std::uint64_t result = 1;
  std::uint64_t base = a;
  for (std::uint64_t e = order_ - 2; e > 0; e >>= 1) {
    if (e & 1) result = result * base % order_;
    base = base * base % order_;
  }
  return static_cast<Elem>(result);
}

Elem Field::random(Rng& rng) const {
  return static_cast<Elem>(std::uniform_int_distribution<std::uint64_t>(0, order_ - 1)(rng));
}

Elem Field::random_nonzero(Rng& rng) const {
  return static_cast<Elem>(std::uniform_int_distribution<std::uint64_t>(1, order_ - 1)(rng));
}

FMatrix Field::random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) const {
  FMatrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = random(rng);
  }
  return out;
}

FMatrix multiply(const Field& f, const FMatrix& a, const FMatrix& b) {
  if (a.cols() != b.rows()) throw SizeError("matrix product dimensions disagree");
  FMatrix out = FMatrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Elem acc = 0;
      for (Eigen::Index l = 0; l < a.cols(); ++l) acc = f.add(acc, f.mul(a(i, l), b(l, j)));
      out(i, j) = acc;
    }
  }
  return out;
}

FMatrix concat_columns(const std::vector<FMatrix>& blocks) {
  if (blocks.empty()) return {};
  Eigen::Index cols = 0;
  for (const FMatrix& b : blocks) {
    if (b.rows() != blocks.front().rows()) throw SizeError("blocks differ in row count");
    cols += b.cols();
  }
  FMatrix out(blocks.front().rows(), cols);
  Eigen::Index at = 0;
  for (const FMatrix& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

namespace {

// Row-reduces `a` in place (and `b` alongside when given). Returns the
// rank; `det` receives the determinant when a is square.
int eliminate(const Field& f, FMatrix& a, FMatrix* b, Elem* det) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  Elem d = 1;
  int r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index pivot = -1;
    for (Eigen::Index i = r; i < rows; ++i) {
      if (a(i, c) != 0) {
        pivot = i;
        break;
      }
    }
    if (pivot < 0) {
      d = 0;
      continue;
    }
    if (pivot != r) {
      a.row(pivot).swap(a.row(r));
      if (b) b->row(pivot).swap(b->row(r));
      d = f.neg(d);
    }
    const Elem p = a(r, c);
    d = f.mul(d, p);
    const Elem pinv = f.inv(p);
    for (Eigen::Index j = 0; j < cols; ++j) a(r, j) = f.mul(a(r, j), pinv);
    if (b) {
      for (Eigen::Index j = 0; j < b->cols(); ++j) (*b)(r, j) = f.mul((*b)(r, j), pinv);
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i == r || a(i, c) == 0) continue;
      const Elem factor = a(i, c);
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = f.sub(a(i, j), f.mul(factor, a(r, j)));
      if (b) {
        for (Eigen::Index j = 0; j < b->cols(); ++j) (*b)(i, j) = f.sub((*b)(i, j), f.mul(factor, (*b)(r, j)));
      }
    }
    ++r;
  }
  if (det) *det = r == rows && rows == cols ? d : 0;
  return r;
}

}  // namespace

int rank(const Field& f, FMatrix a) { return eliminate(f, a, nullptr, nullptr); }

Elem determinant(const Field& f, FMatrix a) {
  if (a.rows() != a.cols()) throw SizeError("determinant of a non-square matrix");
  Elem d = 0;
  eliminate(f, a, nullptr, &d);
  return d;
}

std::optional<FMatrix> solve(const Field& f, FMatrix a, FMatrix b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) throw SizeError("solve needs square a and matching b");
  if (eliminate(f, a, &b, nullptr) < a.rows()) return std::nullopt;
  return b;
}

std::string to_hex(Elem e, const Field& f) {
  const int digits = static_cast<int>((std::bit_width(f.order() - 1) + 3) / 4);
  std::ostringstream out;
  out << std::hex;
  out.width(digits);
  out.fill('0');
  out << e;
  return out.str();
}

}  // namespace dsr
