#include "duality/rational.hpp"

#include <cctype>

#include "duality/core.hpp"

namespace duality {

namespace {

[[noreturn]] void bad(const std::string& text, const std::string& why) {
  throw ParseError("invalid rational '" + text + "': " + why);
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

boost::multiprecision::cpp_int parse_integer(const std::string& s, const std::string& text) {
  std::string body = s;
  bool negative = false;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    negative = body[0] == '-';
    body = body.substr(1);
  }
  if (!all_digits(body)) bad(text, "expected an integer, got '" + s + "'");
  boost::multiprecision::cpp_int v(body);
  return negative ? boost::multiprecision::cpp_int(-v) : v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.empty()) bad(text, "empty");
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const auto num = parse_integer(s.substr(0, slash), text);
    const auto den = parse_integer(s.substr(slash + 1), text);
    if (den == 0) bad(text, "zero denominator");
    return Rational(num, den);
  }
  const auto dot = s.find('.');
  if (dot == std::string::npos) return Rational(parse_integer(s, text));
  std::string int_part = s.substr(0, dot);
  const std::string frac = s.substr(dot + 1);
  bool negative = false;
  if (!int_part.empty() && (int_part[0] == '-' || int_part[0] == '+')) {
    negative = int_part[0] == '-';
    int_part = int_part.substr(1);
  }
  if (int_part.empty()) int_part = "0";
  if (!all_digits(int_part) || (!frac.empty() && !all_digits(frac)) || (frac.empty() && int_part.empty())) {
    bad(text, "malformed decimal");
  }
  boost::multiprecision::cpp_int scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  boost::multiprecision::cpp_int num(int_part + frac);
  if (negative) num = -num;
  return Rational(num, scale);
}

std::string to_string(const Rational& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

}  // namespace duality
