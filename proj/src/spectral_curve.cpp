#include "q2mm/spectral_curve.hpp"

#include <algorithm>
#include <cmath>

#include "q2mm/roots.hpp"

namespace q2mm {

namespace {

constexpr double kBoundaryTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_xi(double xi) {
    if (!(xi > 0.0)) throw std::invalid_argument("xi must be positive");
}

}  // namespace

double xi_critical(const ModelParams& p) {
    double d = p.tau * p.tau - p.t;
    return d > 0.0 ? 0.25 * d * d : 0.0;
}

LimitCoefficients limit_coefficients(const ModelParams& p, double xi) {
    require_positive_xi(xi);
    double tau2 = p.tau * p.tau;
    double S = tau2 - p.t;
    double xicr = xi_critical(p);
    LimitCoefficients lc;
    lc.regime = (xi < xicr) ? Regime::two_cut : Regime::one_cut;

    if (xi >= xicr) {
        double r = std::sqrt(S * S + 12.0 * xi);
        // stable against cancellation when S < 0
        lc.a = (S >= 0.0) ? (S + r) / 6.0 : 2.0 * xi / (r - S);
        lc.b = tau2 * lc.a + xi;
        lc.c = tau2 * lc.a * lc.a * lc.a;
    }
    if (xi <= xicr) {
        double disc = std::max(S * S - 4.0 * xi, 0.0);
        double r = std::sqrt(disc);
        lc.a1 = 0.5 * (S + r);
        lc.a0 = (lc.a1 > 0.0) ? xi / lc.a1 : 0.5 * S;  // a0*a1 = xi
        lc.b0 = lc.a0 * (lc.a0 + 2.0 * lc.a1 + p.t);
        lc.b1 = lc.a1 * (2.0 * lc.a0 + lc.a1 + p.t);
        lc.c0 = tau2 * lc.a0 * lc.a0 * lc.a1;
        lc.c1 = tau2 * lc.a0 * lc.a1 * lc.a1;
    }
    return lc;
}

LaurentSymbol symbol_onecut(const ModelParams& p, double xi) {
    require_positive_xi(xi);
    if (xi < xi_critical(p))
        throw RegimeError("symbol_onecut: xi below the critical value (two-cut regime)");
    LimitCoefficients lc = limit_coefficients(p, xi);
    return LaurentSymbol{0.0, lc.b, 0.0, lc.c};
}

LaurentSymbol symbol_doubled(const ModelParams& p, double xi) {
    require_positive_xi(xi);
    LimitCoefficients lc = limit_coefficients(p, xi);
    LaurentSymbol s;
    if (lc.regime == Regime::two_cut) {
        s = LaurentSymbol{lc.b0 + lc.b1, lc.c0 + lc.c1 + lc.b0 * lc.b1,
                          lc.b0 * lc.c1 + lc.c0 * lc.b1, lc.c0 * lc.c1};
        // the doubled two-cut symbol factors through the double zero at -xi
        double tau2 = p.tau * p.tau;
        double q1 = tau2 * tau2 - p.t * tau2;
        double q0 = tau2 * tau2 * xi;
        for (double w : {-2.5 * xi, 0.7 * xi, 1.9 * xi + 1.0}) {
            double lhs = std::real(s(complex(w)));
            double rhs = (w + xi) * (w + xi) * (w * w + q1 * w + q0) / (w * w * w);
            if (std::abs(lhs - rhs) > 1e-10 * (1.0 + std::abs(lhs)))
                throw std::logic_error("symbol_doubled: factorization residual too large");
        }
    } else {
        s = LaurentSymbol{2.0 * lc.b, 2.0 * lc.c + lc.b * lc.b, 2.0 * lc.b * lc.c,
                          lc.c * lc.c};
    }
    return s;
}

RootQuadruple solve_symbol_doubled(const ModelParams& p, double xi, complex zhat) {
    require_positive_xi(xi);
    if (!(xi <= xi_critical(p)))
        throw RegimeError("solve_symbol_doubled: xi above the critical value");
    double tau2 = p.tau * p.tau;
    double q1 = tau2 * tau2 - p.t * tau2;  // q(w) = w^2 + q1 w + q0
    double q0 = tau2 * tau2 * xi;
    double Q0 = (xi - q1) * xi + q0;  // q(-xi)
    double Q1 = q1 - 2.0 * xi;        // q'(-xi)

    // (w + xi)^2 q(w) = zhat w^3 in u = w + xi:
    // u^4 + (Q1 - zhat) u^3 + (Q0 + 3 xi zhat) u^2 - 3 xi^2 zhat u + xi^3 zhat = 0
    auto us = quartic_roots(complex(Q1) - zhat, complex(Q0) + 3.0 * xi * zhat,
                            -3.0 * xi * xi * zhat, xi * xi * xi * zhat);
    RootQuadruple rq;
    rq.z = zhat;
    for (int i = 0; i < 4; ++i) {
        complex u = us[i];
        // Newton steps on the factored form (cancellation-free in the cluster)
        for (int it = 0; it < 3; ++it) {
            complex w = u - xi;
            complex qw = (w + q1) * w + q0;
            complex f = u * u * qw - zhat * w * w * w;
            complex df = 2.0 * u * qw + u * u * (2.0 * w + q1) - 3.0 * zhat * w * w;
            if (df == complex(0.0, 0.0)) break;
            complex step = f / df;
            if (!std::isfinite(std::abs(step)) || std::abs(step) > 0.25 * (1.0 + std::abs(u)))
                break;
            u -= step;
        }
        rq.w[i] = u - xi;
    }
    std::sort(rq.w.begin(), rq.w.end(), [](const complex& a, const complex& b) {
        double ma = std::norm(a), mb = std::norm(b);
        if (ma != mb) return ma > mb;
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return rq;
}

Subregion classify_subregion(const ModelParams& p, double xi) {
    require_positive_xi(xi);
    double xicr = xi_critical(p);
    if (std::abs(xi - xicr) <= kBoundaryTol) return Subregion::boundary;
    if (xi > xicr) return Subregion::C1;
    double ray = -p.t * p.tau * p.tau;
    if (p.t < 0.0 && std::abs(xi - ray) <= kBoundaryTol) return Subregion::boundary;
    if (p.t < 0.0 && xi < ray) return Subregion::C2b;
    if (p.t < -p.tau * p.tau) return Subregion::C2a;
    return Subregion::C2c;
}

PhaseClass classify_phase(const ModelParams& p) {
    PhaseClass pc;
    pc.xi_cr = xi_critical(p);
    pc.x_star = (p.t <= 0.0) ? 2.0 * std::pow(-p.t, 1.5) / (3.0 * std::sqrt(3.0) * p.tau) : 0.0;
    pc.y_star = (p.t >= 0.0) ? 2.0 * std::pow(p.t, 1.5) / (3.0 * std::sqrt(3.0) * p.tau) : 0.0;

    bool on_parabola = std::abs(pc.xi_cr - 1.0) <= kBoundaryTol;
    bool on_ray = p.t < 0.0 && std::abs(-p.t * p.tau * p.tau - 1.0) <= kBoundaryTol;
    if (on_parabola && on_ray) {
        pc.phase = PhaseCase::multicritical;
        pc.subregion_at_one = Subregion::boundary;
        return pc;
    }
    if (on_parabola || on_ray) {
        pc.phase = PhaseCase::critical_curve;
        pc.subregion_at_one = classify_subregion(p, 1.0);
        return pc;
    }
    if (pc.xi_cr < 1.0) {
        pc.phase = PhaseCase::I;
        pc.subregion_at_one = Subregion::C1;
        return pc;
    }
    pc.subregion_at_one = classify_subregion(p, 1.0);
    switch (pc.subregion_at_one) {
        case Subregion::C2a: pc.phase = PhaseCase::II; break;
        case Subregion::C2b: pc.phase = PhaseCase::III; break;
        default: pc.phase = PhaseCase::IV; break;
    }
    return pc;
}

BranchData branch_points(const ModelParams& p, double xi) {
    require_positive_xi(xi);
    BranchData bd;
    bd.xi = xi;
    double xicr = xi_critical(p);

    if (xi >= xicr) {
        bd.regime = Regime::one_cut;
        LimitCoefficients lc = limit_coefficients(p, xi);
        double r = std::sqrt(lc.b * lc.b + 12.0 * lc.c);
        double u2 = 0.5 * (lc.b + r);
        double v2 = 6.0 * lc.c / (r + lc.b);  // (r - b)/2 without cancellation
        bd.u = std::sqrt(u2);
        bd.v = std::sqrt(v2);
        bd.alpha = 2.0 * bd.u - 2.0 * v2 / (3.0 * bd.u);
        bd.gamma = 2.0 * u2 / (3.0 * bd.v) - 2.0 * bd.v;
        bd.beta = 0.0;
        bd.delta = 0.0;
        bd.gamma1 = SupportSet{CutAxis::real, {{-bd.alpha, bd.alpha}}};
        bd.gamma2 = SupportSet{CutAxis::imaginary, {{-kInf, -bd.gamma}, {bd.gamma, kInf}}};
        bd.gamma3 = SupportSet{CutAxis::real, {{-kInf, kInf}}};
        return bd;
    }

    bd.regime = Regime::two_cut;
    // With s2hat = (w + xi)^2 (w^2 + q1 w + q0) / w^3 the critical points
    // besides the double zero at -xi solve the cancellation-free cubic
    // w^3 - xi w^2 - (q0 + 2 xi q1) w - 3 xi q0 = 0.
    double tau2 = p.tau * p.tau;
    double q1 = tau2 * tau2 - p.t * tau2;
    double q0 = tau2 * tau2 * xi;
    std::array<double, 3> cr{};
    int ncr = cubic_real_roots(-xi, -(q0 + 2.0 * xi * q1), -3.0 * xi * q0, cr);
    if (ncr != 3)
        throw std::domain_error("branch_points: unexpected critical-point structure");

    std::array<double, 4> crit{-xi, cr[0], cr[1], cr[2]};
    std::sort(crit.begin(), crit.end());
    // crit[0] < crit[1] < crit[2] < 0 < crit[3] in the two-cut region
    if (!(crit[3] > 0.0 && crit[2] < 0.0))
        throw std::domain_error("branch_points: critical points out of order");

    auto val = [&](double w) {
        return (w + xi) * (w + xi) * ((w + q1) * w + q0) / (w * w * w);
    };
    bd.hat_alpha = val(crit[3]);
    bd.hat_beta = std::max(val(crit[0]), 0.0);
    bd.hat_gamma = std::min(val(crit[1]), 0.0);
    bd.hat_delta = std::max(val(crit[2]), 0.0);

    bd.alpha = std::sqrt(bd.hat_alpha);
    bd.beta = std::sqrt(bd.hat_beta);
    bd.gamma = std::sqrt(-bd.hat_gamma);
    bd.delta = std::sqrt(bd.hat_delta);

    if (bd.beta > 0.0)
        bd.gamma1 = SupportSet{CutAxis::real, {{-bd.alpha, -bd.beta}, {bd.beta, bd.alpha}}};
    else
        bd.gamma1 = SupportSet{CutAxis::real, {{-bd.alpha, bd.alpha}}};
    if (bd.gamma > 0.0)
        bd.gamma2 = SupportSet{CutAxis::imaginary, {{-kInf, -bd.gamma}, {bd.gamma, kInf}}};
    else
        bd.gamma2 = SupportSet{CutAxis::imaginary, {{-kInf, kInf}}};
    if (bd.delta > 0.0)
        bd.gamma3 = SupportSet{CutAxis::real, {{-kInf, -bd.delta}, {bd.delta, kInf}}};
    else
        bd.gamma3 = SupportSet{CutAxis::real, {{-kInf, kInf}}};
    return bd;
}

double xi_star(const ModelParams& p, double coord, int j) {
    if (j < 1 || j > 3) throw std::invalid_argument("xi_star: j must be 1, 2 or 3");
    double mag = std::abs(coord);
    auto inside = [&](double xi) {
        BranchData bd = branch_points(p, xi);
        switch (j) {
            case 1: return mag >= bd.beta && mag <= bd.alpha;
            case 2: return mag >= bd.gamma;
            default: return mag >= bd.delta;
        }
    };

    double lo = 1e-12;
    double hi = 10.0 * std::max({1.0, xi_critical(p), coord * coord + 1.0});
    bool in_lo = inside(lo);
    bool in_hi = inside(hi);

    if (j == 2) {
        // decreasing family: member for xi <= xi*, so bracket the exit point
        if (!in_lo) return kInf;
        if (in_hi) return hi;  // unreachable for finite coord (gamma grows)
        while (hi - lo > 1e-10 * (1.0 + lo)) {
            double mid = 0.5 * (lo + hi);
            (inside(mid) ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    // increasing families
    if (in_lo) return 0.0;
    if (!in_hi) return kInf;
    while (hi - lo > 1e-10 * (1.0 + lo)) {
        double mid = 0.5 * (lo + hi);
        (inside(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

std::string to_string(Subregion s) {
    switch (s) {
        case Subregion::C1: return "C1";
        case Subregion::C2a: return "C2a";
        case Subregion::C2b: return "C2b";
        case Subregion::C2c: return "C2c";
        default: return "boundary";
    }
}

std::string to_string(PhaseCase c) {
    switch (c) {
        case PhaseCase::I: return "I";
        case PhaseCase::II: return "II";
        case PhaseCase::III: return "III";
        case PhaseCase::IV: return "IV";
        case PhaseCase::critical_curve: return "critical-curve";
        default: return "multicritical";
    }
}

}  // namespace q2mm
