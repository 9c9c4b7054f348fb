#pragma once

#include <array>
#include <complex>
#include <stdexcept>

namespace q2mm {

using complex = std::complex<double>;

struct BranchPointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EndpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Laurent symbol s(w) = w + d0 + d1/w + d2/w^2 + d3/w^3 with d3 != 0.
struct LaurentSymbol {
    double d0 = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;

    complex operator()(complex w) const {
        complex iw = 1.0 / w;
        return w + d0 + iw * (d1 + iw * (d2 + iw * d3));
    }
    // ds/dw
    complex derivative(complex w) const {
        complex iw = 1.0 / w;
        return 1.0 - iw * iw * (d1 + iw * (2.0 * d2 + iw * 3.0 * d3));
    }
    bool valid() const { return d3 != 0.0; }
};

// The four solutions of s(w) = z ordered by descending modulus; exact
// modulus ties break by descending real part, then descending imaginary part.
struct RootQuadruple {
    std::array<complex, 4> w;
    complex z;
};

RootQuadruple solve_symbol(const LaurentSymbol& sym, complex z);

// dw/dz = 1/s'(w) at a solution w of s(w) = z.  Throws BranchPointError when
// |s'(w)| < 1e-12 * (1 + |w|^3).
complex root_derivative(const LaurentSymbol& sym, complex w);

enum class CutAxis { real, imaginary };
enum class CutSide { plus, minus };

// Boundary values of the j-th ordered root (1-based) and its z-derivative on
// a cut.  Real cuts are traversed left to right, so "+" displaces into the
// upper half plane; imaginary cuts are traversed upward, so "+" displaces
// into the left half plane.  Two displacements (eps and eps/2) are combined
// by linear Richardson extrapolation.
struct SideLimit {
    complex w;
    complex wprime;
};

SideLimit side_limit_root(const LaurentSymbol& sym, complex z, int j, CutAxis axis,
                          CutSide side, double eps = 1e-5);

}  // namespace q2mm
