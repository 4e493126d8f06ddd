#include <dsr/errors.hpp>
#include <dsr/rational.hpp>

#include <algorithm>
#include <cctype>
#include <string>

namespace dsr {

namespace {

// Strict base 10. The mpz string constructor would read a leading 0 as octal.
boost::multiprecision::mpz_int parse_decimal(std::string digits) {
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw StructuralError("bad integer: " + digits);
  }
  const auto first = digits.find_first_not_of('0');
  digits = first == std::string::npos ? "0" : digits.substr(first);
  return boost::multiprecision::mpz_int(digits);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw StructuralError("empty rational literal");
  const bool negative = s[0] == '-';
  const std::string body = s.substr(negative ? 1 : 0);
  try {
    Rational value;
    if (const auto dot = body.find('.'); dot != std::string::npos) {
      if (body.find('/') != std::string::npos) throw StructuralError("bad rational: " + s);
      const std::string whole = dot == 0 ? "0" : body.substr(0, dot);
      const std::string frac = body.substr(dot + 1);
      if (frac.empty()) throw StructuralError("bad rational: " + s);
      value = Rational(parse_decimal(whole + frac)) /
              Rational(boost::multiprecision::pow(boost::multiprecision::mpz_int(10), static_cast<unsigned>(frac.size())));
    } else if (const auto slash = body.find('/'); slash != std::string::npos) {
      const auto den = parse_decimal(body.substr(slash + 1));
      if (den == 0) throw StructuralError("zero denominator: " + s);
      value = Rational(parse_decimal(body.substr(0, slash))) / Rational(den);
    } else {
      value = Rational(parse_decimal(body));
    }
    return negative ? Rational(-value) : value;
  } catch (const StructuralError&) {
    throw StructuralError("bad rational: " + s);
  } catch (const std::runtime_error&) {
    throw StructuralError("bad rational: " + s);
  }
}

std::string to_string(const Rational& q) { return q.str(); }

}  // namespace dsr
