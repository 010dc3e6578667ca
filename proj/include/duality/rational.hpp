#pragma once

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace duality {

using Rational = boost::multiprecision::cpp_rational;

/// Parses "p/r", "p" or a finite decimal such as "-0.25" into a reduced fraction.
/// Throws ParseError with the offending text.
Rational parse_rational(const std::string& text);

std::string to_string(const Rational& r);

}  // namespace duality
