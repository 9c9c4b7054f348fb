#include "q2mm/roots.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace q2mm {

namespace {

double clamp1(double x) { return std::max(-1.0, std::min(1.0, x)); }

// One Newton step on the monic cubic at x (real).
double cubic_newton(double b, double c, double d, double x) {
    for (int it = 0; it < 2; ++it) {
        double p = ((x + b) * x + c) * x + d;
        double dp = (3.0 * x + 2.0 * b) * x + c;
        if (dp == 0.0) break;
        double step = p / dp;
        if (!std::isfinite(step) || std::abs(step) > 0.5 * (1.0 + std::abs(x))) break;
        x -= step;
    }
    return x;
}

complex horner4(complex c3, complex c2, complex c1, complex c0, complex w) {
    return (((w + c3) * w + c2) * w + c1) * w + c0;
}

complex horner4d(complex c3, complex c2, complex c1, complex w) {
    return ((4.0 * w + 3.0 * c3) * w + 2.0 * c2) * w + c1;
}

void polish_quartic(complex c3, complex c2, complex c1, complex c0, complex& w, int steps) {
    for (int it = 0; it < steps; ++it) {
        complex p = horner4(c3, c2, c1, c0, w);
        complex dp = horner4d(c3, c2, c1, w);
        if (dp == complex(0.0, 0.0)) return;
        complex step = p / dp;
        if (!std::isfinite(std::abs(step)) || std::abs(step) > 0.25 * (1.0 + std::abs(w))) return;
        w -= step;
    }
}

// Backward error of a candidate root relative to the term magnitudes at w.
double residual_quality(complex c3, complex c2, complex c1, complex c0, complex w) {
    double aw = std::abs(w);
    double scale = aw * aw * aw * aw + std::abs(c3) * aw * aw * aw + std::abs(c2) * aw * aw +
                   std::abs(c1) * aw + std::abs(c0);
    if (scale == 0.0) return 0.0;
    return std::abs(horner4(c3, c2, c1, c0, w)) / scale;
}

}  // namespace

int cubic_real_roots(double b, double c, double d, std::array<double, 3>& out) {
    // depressed form y^3 + p y + q with x = y - b/3
    double p = c - b * b / 3.0;
    double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    double disc = 0.25 * q * q + p * p * p / 27.0;
    double shift = -b / 3.0;

    if (disc > 0.0) {
        double s = std::sqrt(disc);
        double u3 = (-0.5 * q >= 0.0) ? (-0.5 * q + s) : (-0.5 * q - s);
        double u = std::cbrt(u3);
        double v = (u != 0.0) ? -p / (3.0 * u) : 0.0;
        out[0] = cubic_newton(b, c, d, u + v + shift);
        return 1;
    }
    // three real roots (disc <= 0 requires p <= 0)
    double mp = std::max(-p, 0.0);
    double r = 2.0 * std::sqrt(mp / 3.0);
    double phi;
    if (mp == 0.0) {
        phi = 0.0;
    } else {
        phi = std::acos(clamp1(3.0 * q / (p * r)));
    }
    for (int k = 0; k < 3; ++k) {
        double y = r * std::cos(phi / 3.0 - 2.0 * M_PI * k / 3.0);
        out[k] = cubic_newton(b, c, d, y + shift);
    }
    std::sort(out.begin(), out.end());
    return 3;
}

std::array<complex, 3> cubic_roots(complex c2, complex c1, complex c0) {
    // scale so the companion matrix is well balanced
    double m = std::max({std::abs(c2), std::sqrt(std::abs(c1)), std::cbrt(std::abs(c0)), 1e-300});
    complex s2 = c2 / m, s1 = c1 / (m * m), s0 = c0 / (m * m * m);
    Eigen::Matrix3cd comp = Eigen::Matrix3cd::Zero();
    comp(0, 2) = -s0;
    comp(1, 2) = -s1;
    comp(2, 2) = -s2;
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(comp, false);
    std::array<complex, 3> out;
    for (int i = 0; i < 3; ++i) {
        complex w = es.eigenvalues()(i) * m;
        // two Newton steps on the cubic
        for (int it = 0; it < 2; ++it) {
            complex pv = ((w + c2) * w + c1) * w + c0;
            complex dv = (3.0 * w + 2.0 * c2) * w + c1;
            if (dv == complex(0.0, 0.0)) break;
            complex step = pv / dv;
            if (!std::isfinite(std::abs(step)) || std::abs(step) > 0.25 * (1.0 + std::abs(w))) break;
            w -= step;
        }
        out[i] = w;
    }
    return out;
}

std::array<complex, 4> quartic_roots(complex c3, complex c2, complex c1, complex c0) {
    double m = std::max({std::abs(c3), std::sqrt(std::abs(c2)), std::cbrt(std::abs(c1)),
                         std::pow(std::abs(c0), 0.25), 1e-300});
    complex s3 = c3 / m, s2 = c2 / (m * m), s1 = c1 / (m * m * m), s0 = c0 / (m * m * m * m);
    Eigen::Matrix4cd comp = Eigen::Matrix4cd::Zero();
    comp(0, 3) = -s0;
    comp(1, 3) = -s1;
    comp(2, 3) = -s2;
    comp(3, 3) = -s3;
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    comp(3, 2) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(comp, false);
    std::array<complex, 4> out;
    for (int i = 0; i < 4; ++i) {
        complex w = es.eigenvalues()(i) * m;
        polish_quartic(c3, c2, c1, c0, w, 2);
        out[i] = w;
    }

    // One dominant root (|c3| large: the symbol equation at huge |z| or a
    // nearly degenerate d3): the companion matrix loses relative accuracy on
    // the three small roots, so rebuild them from a deflated cubic and keep
    // whichever set has the better residuals.
    double worst = 0.0;
    for (const auto& w : out) worst = std::max(worst, residual_quality(c3, c2, c1, c0, w));
    double small_scale = std::max({std::sqrt(std::abs(c2)), std::cbrt(std::abs(c1)),
                                   std::pow(std::abs(c0), 0.25)});
    if (std::abs(c3) > 50.0 * std::max(small_scale, 1e-300)) {
        complex big = -c3;
        for (int it = 0; it < 60; ++it) {
            complex next = -c3 - (c2 + (c1 + c0 / big) / big) / big;
            if (std::abs(next - big) <= 1e-16 * std::abs(next)) { big = next; break; }
            big = next;
        }
        polish_quartic(c3, c2, c1, c0, big, 2);
        // backward deflation (divide from the constant term up; stable for the
        // largest root)
        complex q0 = -c0 / big;
        complex q1 = (q0 - c1) / big;
        complex q2 = (q1 - c2) / big;
        auto small = cubic_roots(q2, q1, q0);
        std::array<complex, 4> alt{big, small[0], small[1], small[2]};
        for (auto& w : alt) polish_quartic(c3, c2, c1, c0, w, 3);
        double alt_worst = 0.0;
        for (const auto& w : alt) alt_worst = std::max(alt_worst, residual_quality(c3, c2, c1, c0, w));
        if (alt_worst < worst) return alt;
    }
    return out;
}

}  // namespace q2mm
