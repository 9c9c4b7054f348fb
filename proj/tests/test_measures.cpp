#include "q2mm/measures.hpp"

#include <cmath>

#include "doctest.h"
#include "q2mm/quadrature.hpp"

using namespace q2mm;

namespace {
const ModelParams t0{0.0, 1.0};
const ModelParams tm2{-2.0, 1.0};
const ModelParams tp3{3.0, 1.0};
}  // namespace

TEST_CASE("omega roots on the real axis") {
    OmegaRoots om = omega_roots(t0, complex(1.0, 0.0));
    CHECK(om.omega1.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!om.three_real);

    // three real roots for t = -2 near x = 0+
    OmegaRoots om2 = omega_roots(tm2, complex(1e-12, 0.0));
    CHECK(om2.three_real);
    CHECK(om2.omega1.real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(om2.omega2 == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-9));
    CHECK(std::abs(om2.omega3) < 1e-9);

    // residual of the defining cubic
    for (double x : {0.1, 0.5, 2.0}) {
        OmegaRoots o = omega_roots(tm2, complex(x, 0.0));
        double w = o.omega1.real();
        CHECK(std::abs(w * w * w + tm2.t * w - tm2.tau * x) <= 1e-10);
    }
}

TEST_CASE("omega roots on the imaginary axis") {
    OmegaRoots om = omega_roots(t0, complex(0.0, 1.0));
    CHECK(om.omega1.real() == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(om.omega1.imag() == doctest::Approx(0.5).epsilon(1e-12));

    // strictly inside (-iy*, iy*) with t > 0 the selection is undefined
    CHECK_THROWS_AS(omega_roots(tp3, complex(0.0, 1.5)), std::domain_error);
    CHECK_NOTHROW(omega_roots(tp3, complex(0.0, 2.5)));
}

TEST_CASE("external field V1") {
    CHECK(external_field(t0, Field::V1, 1.0) == doctest::Approx(-0.25).epsilon(1e-12));
    // closed form x^2/2 - (3/4)|tau x|^{4/3} at t = 0
    for (double x = -3.0; x <= 3.0; x += 0.37) {
        double expect = 0.5 * x * x - 0.75 * std::pow(std::abs(x), 4.0 / 3.0);
        CHECK(external_field(t0, Field::V1, x) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("external field V3") {
    CHECK(external_field(tm2, Field::V3, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(external_field(t0, Field::V3, 0.3) == 0.0);
    CHECK(external_field(tp3, Field::V3, 0.3) == 0.0);
    // continuous and zero at |x| = x*
    double xs = 2.0 * std::pow(2.0, 1.5) / (3.0 * std::sqrt(3.0));
    CHECK(external_field(tm2, Field::V3, xs) == 0.0);
    CHECK(external_field(tm2, Field::V3, xs * (1.0 - 1e-7)) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(external_field(tm2, Field::V3, 0.999 * xs) > 0.0);
}

TEST_CASE("sigma density closed form at t = 0") {
    for (double y : {0.2, 0.5, 1.0, 2.0}) {
        double expect = std::sqrt(3.0) / (2.0 * M_PI) * std::pow(y, 1.0 / 3.0);
        CHECK(sigma_density(t0, y) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(sigma_density(t0, -y) == doctest::Approx(expect).epsilon(1e-12));
    }
    // vanishes below y* for t > 0 (y* = 2 at (3,1))
    CHECK(sigma_density(tp3, 1.5) == 0.0);
    CHECK(sigma_density(tp3, 2.5) > 0.0);
}

TEST_CASE("mu densities: support, symmetry, positivity") {
    CHECK(mu_density(t0, 1.0, 1, 3.5) == 0.0);
    CHECK(mu_density(t0, 1.0, 2, 0.3) == 0.0);   // inside the gamma gap
    CHECK(mu_density(t0, 0.16, 1, 0.1) == 0.0);  // inside the beta gap
    for (double x : {0.3, 0.9, 1.7}) {
        double d = mu_density(t0, 1.0, 1, x);
        CHECK(d > 0.0);
        CHECK(mu_density(t0, 1.0, 1, -x) == doctest::Approx(d).epsilon(1e-10));
    }
    BranchData bd = branch_points(t0, 1.0);
    CHECK_THROWS_AS(mu_density(t0, 1.0, 1, bd.alpha), EndpointError);
}

TEST_CASE("mu density agrees with the side-limit construction") {
    // the direct boundary-value formula equals the displaced side limits
    LaurentSymbol s = symbol_onecut(t0, 1.0);
    for (double x : {0.4, 1.1, 2.0}) {
        SideLimit up = side_limit_root(s, complex(x, 0.0), 1, CutAxis::real, CutSide::plus);
        SideLimit dn = side_limit_root(s, complex(x, 0.0), 1, CutAxis::real, CutSide::minus);
        double displaced = std::abs(dn.wprime / dn.w - up.wprime / up.w) / (2.0 * M_PI);
        CHECK(mu_density(t0, 1.0, 1, x) == doctest::Approx(displaced).epsilon(1e-6));
    }
}

TEST_CASE("per-xi masses are (1, 2/3, 1/3)") {
    for (double xi : {1.0, 0.16}) {
        CHECK(mu_mass(t0, xi, 1) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(mu_mass(t0, xi, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
        CHECK(mu_mass(t0, xi, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    }
    CHECK(mu_mass(tm2, 1.5, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(mu_mass(tm2, 1.5, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("nu masses") {
    CHECK(nu_mass(t0, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(nu_mass(t0, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(nu_mass(t0, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("nu_1 support and symmetry at (0,1)") {
    BranchData bd = branch_points(t0, 1.0);
    CHECK(bd.alpha == doctest::Approx(2.81156).epsilon(1e-5));
    CHECK(nu_density(t0, 1, bd.alpha + 0.05) == 0.0);
    double d = nu_density(t0, 1, 1.2);
    CHECK(d > 0.0);
    CHECK(nu_density(t0, 1, -1.2) == doctest::Approx(d).epsilon(1e-8));
}

TEST_CASE("nu_1 endpoint exponent is square-root type") {
    BranchData bd = branch_points(t0, 1.0);
    double d1 = nu_density(t0, 1, bd.alpha - 1e-2);
    double d2 = nu_density(t0, 1, bd.alpha - 1e-3);
    double expo = std::log(d1 / d2) / std::log(10.0);
    CHECK(expo > 0.3);
    CHECK(expo < 0.7);
}

TEST_CASE("sigma~ equals sigma") {
    for (const ModelParams& p : {t0, ModelParams{-1.0, 1.0}}) {
        for (double y : {0.25, 0.6, 1.1, 2.2}) {
            CHECK(sigma_tilde_density(p, y) ==
                  doctest::Approx(sigma_density(p, y)).epsilon(2e-6));
        }
    }
    // vanishes below y* for t > 0
    CHECK(sigma_tilde_density(tp3, 1.5) == 0.0);
}

TEST_CASE("F/G derivative identities (finite differences in xi)") {
    // dF_j/dxi = w_j'/w_j, dG_j/dxi = (1/2) w_j'/w_j
    double h = 1e-5;
    for (int j : {1, 2, 3, 4}) {
        complex z(2.3, 1.1);
        double xi = 1.4;  // one-cut at (0,1)
        complex fd = (fg_function(t0, xi + h, z, j, FGKind::F) -
                      fg_function(t0, xi - h, z, j, FGKind::F)) /
                     (2.0 * h);
        LaurentSymbol s = symbol_onecut(t0, xi);
        complex w = solve_symbol(s, z).w[j - 1];
        complex expect = root_derivative(s, w) / w;
        CHECK(std::abs(fd - expect) <= 1e-4 * (1.0 + std::abs(expect)));
    }
    for (int j : {1, 2, 3, 4}) {
        complex z(1.2, 0.4);
        double xi = 0.12;  // two-cut at (0,1)
        complex fd = (fg_function(t0, xi + h, z, j, FGKind::G) -
                      fg_function(t0, xi - h, z, j, FGKind::G)) /
                     (2.0 * h);
        // w'/w with w = what(z^2), w' = 2z what'(z^2)
        RootQuadruple rq = solve_symbol_doubled(t0, xi, z * z);
        LaurentSymbol s = symbol_doubled(t0, xi);
        complex w = rq.w[j - 1];
        complex expect = 0.5 * 2.0 * z * root_derivative(s, w) / w;
        CHECK(std::abs(fd - expect) <= 1e-4 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("F and G connect continuously at xi_cr") {
    double xicr = xi_critical(t0);
    for (int j : {1, 2, 3, 4}) {
        complex z(1.7, 0.8);
        double h1 = 1e-3, h2 = 1e-4;
        double d1 = std::abs(fg_function(t0, xicr - h1, z, j, FGKind::G) -
                             fg_function(t0, xicr + h1, z, j, FGKind::F));
        double d2 = std::abs(fg_function(t0, xicr - h2, z, j, FGKind::G) -
                             fg_function(t0, xicr + h2, z, j, FGKind::F));
        double extrap = std::abs(d2 + (d2 - d1) * h2 / (h1 - h2));
        CHECK(extrap <= 1e-6);
    }
}

TEST_CASE("G limits as xi -> 0") {
    // G1 -> 0 and G2 -> x - tau*omega1(x)
    double xi = 1e-6;
    for (double x : {0.4, 1.0, 1.9}) {
        complex g1 = fg_function(t0, xi, complex(x, 0.0), 1, FGKind::G);
        complex g2 = fg_function(t0, xi, complex(x, 0.0), 2, FGKind::G);
        double expect = x - omega_roots(t0, complex(x, 0.0)).omega1.real();
        CHECK(std::abs(g1) <= 1e-4);
        CHECK(std::abs(g2 - expect) <= 1e-4 * (1.0 + std::abs(expect)));
    }
    CHECK_THROWS_AS(fg_function(t0, 0.5, complex(1.0, 0.0), 1, FGKind::G), RegimeError);
    CHECK_THROWS_AS(fg_function(t0, 0.1, complex(1.0, 0.0), 1, FGKind::F), RegimeError);
}

TEST_CASE("integrated field V1~ differs from V1 by a constant") {
    double c0 = integrated_field(t0, Field::V1, 0.3) - external_field(t0, Field::V1, 0.3);
    for (double x : {0.8, 1.6, 2.5, 3.3}) {
        double c = integrated_field(t0, Field::V1, x) - external_field(t0, Field::V1, x);
        CHECK(c == doctest::Approx(c0).epsilon(2e-5));
    }
}

TEST_CASE("integrated field V3~ equals V3") {
    for (double x : {0.15, 0.5, 0.9, 1.3}) {
        CHECK(integrated_field(tm2, Field::V3, x) ==
              doctest::Approx(external_field(tm2, Field::V3, x)).epsilon(1e-6));
    }
    // identically zero for t >= 0
    for (double x : {0.2, 0.9}) CHECK(std::abs(integrated_field(t0, Field::V3, x)) <= 1e-8);
}

TEST_CASE("sampled measures integrate to their declared mass") {
    SampleOptions opt;
    opt.n_finite = 400;
    opt.n_ray_near = 200;
    MeasureDensity m1 = sample_nu(t0, 1, opt);
    CHECK(m1.declared_mass == 1.0);
    CHECK(m1.numeric_mass() == doctest::Approx(1.0).epsilon(1e-6));
    for (double v : m1.values) CHECK(v >= 0.0);
    // symmetric under negation
    size_t n = m1.grid.size();
    for (size_t i = 0; i < n / 4; i += 7) {
        CHECK(m1.grid[i] == doctest::Approx(-m1.grid[n - 1 - i]).epsilon(1e-13));
        CHECK(m1.values[i] == doctest::Approx(m1.values[n - 1 - i]).epsilon(1e-10));
    }

    MeasureDensity m2 = sample_nu(t0, 2, opt);
    CHECK(m2.numeric_mass() == doctest::Approx(2.0 / 3.0).epsilon(1e-5));
    MeasureDensity m3 = sample_nu(t0, 3, opt);
    CHECK(m3.numeric_mass() == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("log potential basics") {
    // a narrow unit bump near 0 behaves like a point mass
    MeasureDensity m;
    m.support = SupportSet{CutAxis::real, {{-0.01, 0.01}}};
    int n = 41;
    for (int i = 0; i < n; ++i) {
        double x = -0.01 + 0.02 * i / (n - 1);
        m.grid.push_back(x);
        m.values.push_back(50.0);  // mass 1 over width 0.02
    }
    m.comp_begin = {0};
    m.comp_end = {n};
    m.powerlaw_cell.assign(n - 1, 0);
    m.declared_mass = 1.0;
    CHECK(m.numeric_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(log_potential(m, complex(2.0, 0.0)) == doctest::Approx(-std::log(2.0)).epsilon(1e-4));

    // far field: U + mass log|z| -> 0
    MeasureDensity nu1 = sample_nu(t0, 1);
    for (complex z : {complex(1e3, 0.0), complex(0.0, 1e3), complex(700.0, 700.0)}) {
        CHECK(std::abs(log_potential(nu1, z) + nu1.numeric_mass() * std::log(std::abs(z))) <=
              1e-3);
    }

    // linearity in the measure: scaling the density scales U
    MeasureDensity half = m;
    for (auto& v : half.values) v *= 0.5;
    complex z(0.7, 0.3);
    CHECK(log_potential(half, z) == doctest::Approx(0.5 * log_potential(m, z)).epsilon(1e-12));
}

TEST_CASE("log potential on the support handles the log singularity") {
    MeasureDensity nu1 = sample_nu(t0, 1);
    double u = log_potential(nu1, complex(0.5, 0.0));
    CHECK(std::isfinite(u));
    // compare against an off-axis evaluation close to the support
    double u_eps = log_potential(nu1, complex(0.5, 1e-7));
    CHECK(u == doctest::Approx(u_eps).epsilon(1e-6));
}

TEST_CASE("Euler-Lagrange residuals at (0,1)") {
    ELOptions opt;
    opt.sampling.n_finite = 500;
    opt.sampling.n_ray_near = 250;
    ELReport rep = el_residuals(t0, opt);
    CHECK(rep.el1.max_equality_residual <= 5e-3);
    CHECK(rep.el1.min_margin > 0.0);
    CHECK(rep.el2.max_equality_residual <= 5e-3);
    CHECK(rep.el2.min_margin > 0.0);
    CHECK(rep.el3.max_equality_residual <= 5e-3);
    CHECK(rep.per_xi_max_residual <= 5e-3);
    CHECK(std::isfinite(rep.ell));
}

TEST_CASE("energy functional prefers the equilibrium triple") {
    SampleOptions opt;
    opt.n_finite = 350;
    opt.n_ray_near = 180;
    opt.dlog = 0.02;
    MeasureDensity m1 = sample_nu(t0, 1, opt);
    MeasureDensity m2 = sample_nu(t0, 2, opt);
    MeasureDensity m3 = sample_nu(t0, 3, opt);
    double e0 = energy_functional(m1, m2, m3, t0);
    CHECK(std::isfinite(e0));
    int better = 0;
    for (int k = 0; k < 6; ++k) {
        bool first = (k % 2 == 1);
        MeasureDensity pert = perturb_measure(first ? m1 : m3, first ? 1 : 3, t0, 100 + k);
        double e = first ? energy_functional(pert, m2, m3, t0)
                         : energy_functional(m1, m2, pert, t0);
        if (e > e0) ++better;
    }
    CHECK(better == 6);
}

TEST_CASE("energy functional validates masses and constraint") {
    SampleOptions opt;
    opt.n_finite = 300;
    opt.n_ray_near = 150;
    opt.dlog = 0.02;
    MeasureDensity m1 = sample_nu(t0, 1, opt);
    MeasureDensity m2 = sample_nu(t0, 2, opt);
    MeasureDensity m3 = sample_nu(t0, 3, opt);
    MeasureDensity bad = m1;
    for (auto& v : bad.values) v *= 1.01;  // mass off by 1%
    CHECK_THROWS_AS(energy_functional(bad, m2, m3, t0), std::invalid_argument);
    MeasureDensity viol = m2;
    for (auto& v : viol.values) v *= 1.0 + 1e-5;  // breaks m2 <= sigma on the active part
    CHECK_THROWS_AS(energy_functional(m1, viol, m3, t0), std::invalid_argument);
}
