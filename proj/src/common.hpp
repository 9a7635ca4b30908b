#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qbnf {

using cplx = std::complex<double>;

// Bad or inconsistent user input (config files, malformed symbols, ...).
// Maps to exit/error code 2 at the tool boundary.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An internal consistency check failed (a guaranteed identity or a stated
// precondition of the iteration broke).  Maps to exit/error code 3.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// sin(x)/x, switching to the Taylor expansion below |x| = 1e-4 so the
// removable singularity costs no accuracy.
double sinc(double x);

// Fixed 17-significant-digit decimal form; round-trips IEEE doubles exactly.
std::string fmt17(double x);

}  // namespace qbnf
