#pragma once

#include <array>
#include <complex>

namespace q2mm {

using complex = std::complex<double>;

// Real roots of x^3 + b x^2 + c x + d, ascending.  Returns 1 or 3.
// A double root is reported twice.
int cubic_real_roots(double b, double c, double d, std::array<double, 3>& out);

// Roots of the monic complex cubic w^3 + c2 w^2 + c1 w + c0.
std::array<complex, 3> cubic_roots(complex c2, complex c1, complex c0);

// Roots of the monic complex quartic w^4 + c3 w^3 + c2 w^2 + c1 w + c0.
// Companion-matrix eigenvalues followed by Newton polish; falls back to a
// split big-root/deflated-cubic path when one root dwarfs the others.
std::array<complex, 4> quartic_roots(complex c3, complex c2, complex c1, complex c0);

}  // namespace q2mm
