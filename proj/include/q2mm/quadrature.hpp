#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace q2mm {

// Gauss-Legendre rule on [-1, 1]. Nodes are computed once per order by
// Newton iteration on P_n and cached.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussLegendre& get(int n);
};

// Fixed-order Gauss-Legendre on [a, b].
double gl_integrate(const std::function<double(double)>& f, double a, double b, int order = 20);

// Adaptive panel integration: bisect until the GL(n) vs GL(2n) discrepancy
// on each panel is below the local tolerance share.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-9, int max_depth = 17);

// Integral over [a, a + scale*tan(theta_max)) of a decaying integrand on a ray,
// mapped through s = a + scale*tan(theta).  The caller picks `scale` near the
// natural width of the density.
double ray_integrate(const std::function<double(double)>& f, double a, double scale,
                     double tol = 1e-9, double s_cap = 1e8);

inline double sqr(double x) { return x * x; }

}  // namespace q2mm
