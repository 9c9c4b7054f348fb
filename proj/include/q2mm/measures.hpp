#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "q2mm/spectral_curve.hpp"

namespace q2mm {

// ---------------------------------------------------------------------------
// omega roots and closed-form fields
// ---------------------------------------------------------------------------

// Solutions of omega^3 + t*omega = tau*z for z on the real or imaginary axis.
// On the real axis omega1 is the real solution of largest modulus; when three
// real solutions exist (t < 0, |x| <= x*) they are ordered by descending
// modulus, with the x -> 0+ convention at the origin.  On the imaginary axis
// omega1 is the solution with positive real part.
struct OmegaRoots {
    complex omega1;
    double omega2 = 0.0;
    double omega3 = 0.0;
    bool three_real = false;
};

OmegaRoots omega_roots(const ModelParams& p, complex z);

enum class Field { V1, V3 };

// V1(x) = x^2/2 - (3/4) omega1^4 - (t/2) omega1^2;  V3 from the secondary
// extrema of W(y) - tau*x*y (zero for t >= 0 or |x| >= x*).
double external_field(const ModelParams& p, Field which, double x);

// Density of the constraint sigma at z = i*y: (tau/pi) Re omega1, zero for
// |y| < y*.
double sigma_density(const ModelParams& p, double y);

// ---------------------------------------------------------------------------
// densities of mu_j^xi and their xi-averages
// ---------------------------------------------------------------------------

// Density (per unit length) of mu_j^xi at a point on the axis of Gamma_j;
// coord is the real coordinate along that axis (Im z for j = 2).
double mu_density(const ModelParams& p, double xi, int j, double coord);

// Total mass of mu_j^xi by adaptive quadrature over its support.
double mu_mass(const ModelParams& p, double xi, int j, double tol = 1e-8);

// Density of nu_j = int_0^1 mu_j^xi dxi.
double nu_density(const ModelParams& p, int j, double coord);

// Total mass of nu_j via int_0^1 mass(mu_j^xi) dxi.
double nu_mass(const ModelParams& p, int j, double tol = 1e-7);

// Density of sigma~ at z = i*y: int_0^{xi*} mu_2^xi density dxi.
double sigma_tilde_density(const ModelParams& p, double y);

// ---------------------------------------------------------------------------
// F/G functions and integrated fields
// ---------------------------------------------------------------------------

enum class FGKind { F, G };

// F_j(z,xi) = z - tau^2 a(xi)/w_j - w_j (one-cut); G_j(z,xi) = z*xi/(w_j+xi)
// with the two-cut root convention w_j(z;xi) = what_j(z^2;xi).
complex fg_function(const ModelParams& p, double xi, complex z, int j, FGKind kind);

// V1~ and V3~: xi-integrals of log|w1/w2| resp. log|w3/w4| with half weight
// below xi_cr.
double integrated_field(const ModelParams& p, Field which, double x);

// ---------------------------------------------------------------------------
// sampled measures, logarithmic potentials, energy
// ---------------------------------------------------------------------------

// Mass not carried by the grid: truncated ray tails (placed at their
// log-moment-matching coordinate) and the slivers between a support endpoint
// and the first grid node.
struct PointMass {
    double coord;
    double mass;
};

struct MeasureDensity {
    SupportSet support;
    std::vector<double> grid;    // ascending coordinates on the axis
    std::vector<double> values;  // nonnegative density per unit length
    // contiguous sampled runs (index ranges into grid); cells across run
    // boundaries are support gaps
    std::vector<int> comp_begin, comp_end;
    // per-cell flag: integrate the cell assuming a local power law (used on
    // log-spaced ray sections), else linearly
    std::vector<unsigned char> powerlaw_cell;
    std::vector<PointMass> point_mass;
    double declared_mass = 0.0;

    // mass of the sampled representation (cells + point masses)
    double numeric_mass() const;
};

struct SampleOptions {
    int n_finite = 900;       // points per finite component side
    int n_ray_near = 320;     // points on the near section of a ray
    double dlog = 0.012;      // log spacing on the far section
    double ray_cutoff = 1e5;  // far section extent (scaled)
};

MeasureDensity sample_nu(const ModelParams& p, int j, const SampleOptions& opt = {});
MeasureDensity sample_mu(const ModelParams& p, double xi, int j, const SampleOptions& opt = {});

// U^m(z) = -int log|z - s| dm(s) for a sampled measure on its axis.
double log_potential(const MeasureDensity& m, complex z);

// Energy functional I(m1) - I(m1,m2) + I(m2) - I(m2,m3) + I(m3)
// + int V1 dm1 + int V3 dm3.  Throws on mass or constraint violations.
double energy_functional(const MeasureDensity& m1, const MeasureDensity& m2,
                         const MeasureDensity& m3, const ModelParams& p);

// Mass-preserving admissible reshuffle of one of the three measures.
// `which` selects the measure (1..3); the constraint m2 <= sigma and
// nonnegativity are respected.
MeasureDensity perturb_measure(const MeasureDensity& m, int which, const ModelParams& p,
                               std::uint64_t seed, double amplitude = 0.25);

// ---------------------------------------------------------------------------
// Euler-Lagrange residuals
// ---------------------------------------------------------------------------

struct ELConditionStats {
    double max_equality_residual = 0.0;
    double min_margin = 0.0;  // min of the one-sided inequality slack off support
    int support_points = 0;
    int off_points = 0;
};

struct ELOptions {
    int support_points = 48;
    int off_points = 50;
    std::uint64_t seed = 12345;
    SampleOptions sampling;
    double per_xi = 1.0;  // xi used for the per-xi spot check
};

struct ELReport {
    double ell = 0.0;  // fitted Lagrange constant for condition 1
    ELConditionStats el1, el2, el3;
    double per_xi_ell = 0.0;
    double per_xi_max_residual = 0.0;
};

ELReport el_residuals(const ModelParams& p, const ELOptions& opt = {});

// Cumulative distribution of nu_1 (for Kolmogorov-Smirnov comparisons).
struct Nu1Cdf {
    std::vector<double> x;
    std::vector<double> F;

    double operator()(double t) const;
};

Nu1Cdf build_nu1_cdf(const ModelParams& p, int points_per_component = 220);

}  // namespace q2mm
