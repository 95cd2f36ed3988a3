#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace lamina {

using Rational = mpq_class;

/// Parses "p/q" or an integer into a canonical rational. Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" (or "p" when q = 1).
std::string format_rational(const Rational& value);

double to_double(const Rational& value);

}  // namespace lamina
