#pragma once

// Text rendering of complex values at 15 significant digits ("re+imi") and
// the matching parser, which accepts "re", "re+imi" and "re-imi".

#include <cstdio>
#include <string>

#include "isored/graph.hpp"

namespace isored {

inline std::string format_double(double x, int digits = 15) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::string format_complex(cplx z, int digits = 15) {
  if (z.imag() == 0.0) return format_double(z.real(), digits);
  return format_double(z.real(), digits) + (z.imag() < 0 ? "-" : "+") +
         format_double(std::abs(z.imag()), digits) + "i";
}

inline cplx parse_complex(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != ' ' && c != '\t') s += c;
  if (s.empty()) throw parse_error(0, "empty complex literal");

  auto to_double = [&](const std::string& part) -> double {
    size_t used = 0;
    double v;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw parse_error(0, "malformed complex literal '" + text + "'");
    }
    if (used != part.size())
      throw parse_error(0, "malformed complex literal '" + text + "'");
    return v;
  };

  if (s.back() != 'i') return cplx(to_double(s), 0.0);
  s.pop_back();
  // Split at the last +/- that is not a leading sign or an exponent sign.
  size_t split = std::string::npos;
  for (size_t k = s.size(); k-- > 1;) {
    char c = s[k];
    if ((c == '+' || c == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos) return cplx(0.0, to_double(s));
  return cplx(to_double(s.substr(0, split)), to_double(s.substr(split)));
}

}  // namespace isored
