#include "q2mm/symbol.hpp"

#include <algorithm>
#include <cmath>

#include "q2mm/roots.hpp"

namespace q2mm {

namespace {

bool modulus_less(const complex& a, const complex& b) {
    // descending modulus; ties by descending Re, then descending Im
    double ma = std::norm(a), mb = std::norm(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

RootQuadruple solve_upper(const LaurentSymbol& sym, complex z) {
    // w^4 + (d0 - z) w^3 + d1 w^2 + d2 w + d3 = 0
    auto roots = quartic_roots(complex(sym.d0) - z, complex(sym.d1), complex(sym.d2),
                               complex(sym.d3));
    std::sort(roots.begin(), roots.end(), modulus_less);
    return RootQuadruple{roots, z};
}

}  // namespace

RootQuadruple solve_symbol(const LaurentSymbol& sym, complex z) {
    if (!sym.valid()) throw std::invalid_argument("degenerate symbol: d3 = 0");
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("solve_symbol: z must be finite");
    // Conjugation equivariance: solve in the closed upper half plane and
    // mirror, so real z yields exactly conjugate root pairs.
    if (z.imag() < 0.0) {
        RootQuadruple rq = solve_upper(sym, std::conj(z));
        for (auto& w : rq.w) w = std::conj(w);
        std::sort(rq.w.begin(), rq.w.end(), modulus_less);
        rq.z = z;
        return rq;
    }
    return solve_upper(sym, z);
}

complex root_derivative(const LaurentSymbol& sym, complex w) {
    complex ds = sym.derivative(w);
    double aw = std::abs(w);
    if (std::abs(ds) < 1e-12 * (1.0 + aw * aw * aw))
        throw BranchPointError("root_derivative: s'(w) vanishes (branch point)");
    return 1.0 / ds;
}

SideLimit side_limit_root(const LaurentSymbol& sym, complex z, int j, CutAxis axis,
                          CutSide side, double eps) {
    if (j < 1 || j > 4) throw std::invalid_argument("side_limit_root: j must be in 1..4");
    if (!(eps > 0.0)) throw std::invalid_argument("side_limit_root: eps must be positive");

    complex normal = (axis == CutAxis::real) ? complex(0.0, 1.0) : complex(-1.0, 0.0);
    if (side == CutSide::minus) normal = -normal;

    double h = eps * (1.0 + std::abs(z));
    auto eval = [&](double hh) {
        complex zz = z + normal * hh;
        RootQuadruple rq = solve_symbol(sym, zz);
        complex w = rq.w[j - 1];
        return SideLimit{w, root_derivative(sym, w)};
    };
    SideLimit f1 = eval(h);
    SideLimit f2 = eval(0.5 * h);
    // linear extrapolation to h = 0
    return SideLimit{2.0 * f2.w - f1.w, 2.0 * f2.wprime - f1.wprime};
}

}  // namespace q2mm
