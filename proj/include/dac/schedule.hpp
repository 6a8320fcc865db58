#pragma once

#include <cmath>

#include "dac/error.hpp"

namespace dac {

// Polynomially decaying schedule t^{-p}, t >= 1.
inline double step_size(double exponent, long t) {
  require(t >= 1, "step_size: t must be >= 1");
  return std::pow(static_cast<double>(t), -exponent);
}

}  // namespace dac
