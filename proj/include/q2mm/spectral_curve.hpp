#pragma once

#include <limits>
#include <string>
#include <vector>

#include "q2mm/symbol.hpp"

namespace q2mm {

struct ModelParams {
    double t = 0.0;
    double tau = 1.0;  // > 0

    ModelParams() = default;
    ModelParams(double t_, double tau_) : t(t_), tau(tau_) {
        if (!(tau > 0.0)) throw std::invalid_argument("ModelParams: tau must be positive");
    }
};

// (tau^2 - t)^2 / 4 for t < tau^2, else 0.
double xi_critical(const ModelParams& p);

enum class Regime { one_cut, two_cut };

struct LimitCoefficients {
    Regime regime = Regime::one_cut;
    // one-cut values (filled for xi >= xi_cr)
    double a = 0.0, b = 0.0, c = 0.0;
    // two-cut 2-periodic values (filled for xi <= xi_cr)
    double a0 = 0.0, a1 = 0.0, b0 = 0.0, b1 = 0.0, c0 = 0.0, c1 = 0.0;
};

LimitCoefficients limit_coefficients(const ModelParams& p, double xi);

// s1(w; xi) = w + b/w + c/w^3, defined for xi >= xi_cr.
LaurentSymbol symbol_onecut(const ModelParams& p, double xi);

// Doubled symbol w + A + B/w + C/w^2 + D/w^3 for any xi > 0 (two-cut
// coefficients below xi_cr, doubled one-cut coefficients above).
LaurentSymbol symbol_doubled(const ModelParams& p, double xi);

// Roots of s2hat(w; xi) = zhat in the two-cut regime, modulus-ordered.
// Works through the factorization (w + xi)^2 (w^2 + q1 w + q0) - zhat w^3
// shifted to u = w + xi, which keeps the root cluster near -xi resolvable
// when the symbol degenerates (small xi, near-critical parameters).
RootQuadruple solve_symbol_doubled(const ModelParams& p, double xi, complex zhat);

struct Interval {
    double lo;
    double hi;
};

struct SupportSet {
    CutAxis axis = CutAxis::real;
    std::vector<Interval> parts;  // disjoint, sorted

    bool contains(double coord, double tol = 0.0) const {
        for (const auto& iv : parts)
            if (coord >= iv.lo - tol && coord <= iv.hi + tol) return true;
        return false;
    }
};

struct BranchData {
    double xi = 0.0;
    Regime regime = Regime::one_cut;
    // undoubled-scale branch points; beta = delta = 0 in the one-cut regime
    double alpha = 0.0, beta = 0.0, gamma = 0.0, delta = 0.0;
    // one-cut critical points of s1
    double u = 0.0, v = 0.0;
    // two-cut branch points of the doubled symbol
    double hat_alpha = 0.0, hat_beta = 0.0, hat_gamma = 0.0, hat_delta = 0.0;
    SupportSet gamma1, gamma2, gamma3;

    const SupportSet& support(int j) const {
        switch (j) {
            case 1: return gamma1;
            case 2: return gamma2;
            case 3: return gamma3;
        }
        throw std::invalid_argument("support index must be 1, 2 or 3");
    }
};

BranchData branch_points(const ModelParams& p, double xi);

enum class Subregion { C1, C2a, C2b, C2c, boundary };
enum class PhaseCase { I, II, III, IV, critical_curve, multicritical };

Subregion classify_subregion(const ModelParams& p, double xi);

struct PhaseClass {
    PhaseCase phase = PhaseCase::I;
    Subregion subregion_at_one = Subregion::C1;
    double xi_cr = 0.0;
    double x_star = 0.0;
    double y_star = 0.0;
};

PhaseClass classify_phase(const ModelParams& p);

// Threshold xi at which `coord` (a coordinate on the axis of Gamma_j) enters
// the family Gamma_j(xi).  For j = 1, 3 (increasing families) this is the
// smallest such xi; for j = 2 (decreasing family) the largest.  Returns 0
// when the point belongs to every Gamma_j(xi), and +infinity when it never
// does.
double xi_star(const ModelParams& p, double coord, int j);

std::string to_string(Subregion s);
std::string to_string(PhaseCase c);

}  // namespace q2mm
