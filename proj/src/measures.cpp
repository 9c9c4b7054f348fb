#include "q2mm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "q2mm/quadrature.hpp"
#include "q2mm/roots.hpp"

namespace q2mm {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double x_star_of(const ModelParams& p) {
    return p.t <= 0.0 ? 2.0 * std::pow(-p.t, 1.5) / (3.0 * std::sqrt(3.0) * p.tau) : 0.0;
}
double y_star_of(const ModelParams& p) {
    return p.t >= 0.0 ? 2.0 * std::pow(p.t, 1.5) / (3.0 * std::sqrt(3.0) * p.tau) : 0.0;
}

complex axis_point(CutAxis axis, double coord) {
    return axis == CutAxis::imaginary ? complex(0.0, coord) : complex(coord, 0.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// omega roots, closed-form fields, sigma
// ---------------------------------------------------------------------------

OmegaRoots omega_roots(const ModelParams& p, complex z) {
    OmegaRoots out;
    if (z.imag() == 0.0) {
        double x = z.real();
        std::array<double, 3> r{};
        int n = cubic_real_roots(0.0, p.t, -p.tau * x, r);
        if (n == 1) {
            out.omega1 = r[0];
            return out;
        }
        // descending modulus; the x -> 0+ convention resolves the tie at 0
        std::sort(r.begin(), r.end(), [](double a, double b) {
            if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
            return a > b;
        });
        out.omega1 = r[0];
        out.omega2 = r[1];
        out.omega3 = r[2];
        out.three_real = true;
        return out;
    }
    if (z.real() != 0.0)
        throw std::invalid_argument("omega_roots: z must lie on the real or imaginary axis");

    // z = iy: put omega = i*psi, then psi^3 - t*psi + tau*y = 0 with real psi
    // for the purely imaginary solutions.
    double y = z.imag();
    std::array<double, 3> psi{};
    int n = cubic_real_roots(0.0, -p.t, p.tau * y, psi);
    if (n == 3) {
        double ys = y_star_of(p);
        if (p.t > 0.0 && std::abs(y) < ys * (1.0 - 1e-12))
            throw std::domain_error(
                "omega_roots: all solutions purely imaginary inside (-iy*, iy*); "
                "no positive-real-part selection");
        double d01 = psi[1] - psi[0], d12 = psi[2] - psi[1];
        double rep = (d01 <= d12) ? 0.5 * (psi[0] + psi[1]) : 0.5 * (psi[1] + psi[2]);
        out.omega1 = complex(0.0, rep);
        return out;
    }
    double psi0 = psi[0];
    double re_pair = -0.5 * psi0;                               // Re of the complex psi pair
    double mod2 = (psi0 != 0.0) ? -p.tau * y / psi0 : 0.0;      // |psi_pair|^2
    double b2 = std::max(mod2 - re_pair * re_pair, 0.0);
    out.omega1 = complex(std::sqrt(b2), re_pair);               // omega = i*psi
    return out;
}

double external_field(const ModelParams& p, Field which, double x) {
    if (which == Field::V1) {
        double w1 = omega_roots(p, complex(x, 0.0)).omega1.real();
        double w2 = w1 * w1;
        return 0.5 * x * x - 0.75 * w2 * w2 - 0.5 * p.t * w2;
    }
    if (p.t >= 0.0) return 0.0;
    if (std::abs(x) >= x_star_of(p)) return 0.0;
    OmegaRoots om = omega_roots(p, complex(x, 0.0));
    double a2 = om.omega2 * om.omega2, a3 = om.omega3 * om.omega3;
    return 0.75 * a2 * a2 + 0.5 * p.t * a2 - 0.75 * a3 * a3 - 0.5 * p.t * a3;
}

double sigma_density(const ModelParams& p, double y) {
    if (std::abs(y) < y_star_of(p)) return 0.0;
    return p.tau / M_PI * omega_roots(p, complex(0.0, y)).omega1.real();
}

// ---------------------------------------------------------------------------
// mu_j^xi densities
// ---------------------------------------------------------------------------

namespace {

// Density evaluator bound to fixed (p, xi, j); no support checks.
struct MuEvaluator {
    ModelParams p;
    double xi;
    int j;
    BranchData bd;
    LaurentSymbol sym;
    bool two_cut;

    MuEvaluator(const ModelParams& p_, double xi_, int j_)
        : p(p_), xi(xi_), j(j_), bd(branch_points(p_, xi_)) {
        two_cut = bd.regime == Regime::two_cut;
        sym = two_cut ? symbol_doubled(p_, xi_) : symbol_onecut(p_, xi_);
    }

    CutAxis axis() const { return j == 2 ? CutAxis::imaginary : CutAxis::real; }

    // s2hat'(w) through the factorization; stays accurate inside the root
    // cluster near -xi where the Laurent form cancels.
    complex dshat(complex w) const {
        double tau2 = p.tau * p.tau;
        double q1 = tau2 * tau2 - p.t * tau2;
        double q0 = tau2 * tau2 * xi;
        complex g = ((w - xi) * w - (q0 + 2.0 * xi * q1)) * w - 3.0 * xi * q0;
        return (w + xi) * g / (w * w * w * w);
    }

    // On a cut the j-th and (j+1)-th roots are complex conjugates (real axis)
    // or reflected conjugates (imaginary axis), so the two side limits in the
    // density formula are the pair members themselves: the boundary value
    // reduces to Im or Re of w'(z)/w(z) at the point.  This stays accurate
    // arbitrarily close to the endpoints where a displaced evaluation smears.
    double density(double coord) const {
        if (two_cut && std::abs(coord) < 1e-9) coord = (coord < 0.0) ? -1e-9 : 1e-9;
        complex z = axis_point(axis(), coord);
        complex lam;
        if (!two_cut) {
            RootQuadruple rq = solve_symbol(sym, z);
            complex w = rq.w[j - 1];
            lam = 1.0 / (w * sym.derivative(w));
        } else {
            RootQuadruple rq = solve_symbol_doubled(p, xi, z * z);
            complex w = rq.w[j - 1];
            lam = 2.0 * z / (w * dshat(w));
        }
        double val = (axis() == CutAxis::imaginary) ? std::abs(lam.real()) : std::abs(lam.imag());
        double rho = val / M_PI;
        return two_cut ? 0.5 * rho : rho;
    }
};

}  // namespace

double mu_density(const ModelParams& p, double xi, int j, double coord) {
    if (j < 1 || j > 3) throw std::invalid_argument("mu_density: j must be 1, 2 or 3");
    MuEvaluator ev(p, xi, j);
    const SupportSet& sup = ev.bd.support(j);
    if (!sup.contains(coord)) return 0.0;
    for (const auto& iv : sup.parts)
        for (double e : {iv.lo, iv.hi})
            if (std::isfinite(e) && std::abs(coord - e) <= 1e-12 * (1.0 + std::abs(e)))
                throw EndpointError("mu_density: evaluation at a support endpoint");
    return ev.density(coord);
}

namespace {

// Interior points where a mu_j^xi density has a kink: branch points of the
// other root collisions that fall inside the support.
std::vector<double> interior_breaks(const BranchData& bd, int j) {
    std::vector<double> cand;
    if (j == 1 || j == 3) {
        cand = {bd.beta, bd.delta, bd.alpha};
        if (bd.regime == Regime::two_cut) cand.push_back(0.0);
    }
    return cand;
}

// Mass of a density over [a, b]: square-root substitution on the quarters
// touching the endpoints (inverse-square-root edges), plain refinement in
// the middle.
double mass_finite(const std::function<double(double)>& rho, double a, double b, double tol) {
    double len = b - a;
    if (!(len > 0.0)) return 0.0;
    double h = 0.25 * len;
    double total = adaptive_integrate(
        [&](double s) { return 2.0 * s * rho(a + s * s); }, 0.0, std::sqrt(h), tol);
    total += adaptive_integrate(rho, a + h, b - h, tol);
    total += adaptive_integrate(
        [&](double s) { return 2.0 * s * rho(b - s * s); }, 0.0, std::sqrt(h), tol);
    return total;
}

// Mass over [b, +inf) for a density decaying like s^-kappa, kappa near 5/3.
// Substitutions s = b/u, u = r^(3/2) make the integrand smooth.
double mass_far_ray(const std::function<double(double)>& rho, double b, double tol) {
    return adaptive_integrate(
        [&](double r) {
            double s = b / std::pow(r, 1.5);
            return rho(s) * 1.5 * b / (r * r * std::sqrt(r));
        },
        0.0, 1.0, tol);
}

// Mass over a ray [a, +inf): near section with endpoint substitution, far
// section with the decay substitution.
double mass_ray(const std::function<double(double)>& rho, double a,
                const std::vector<double>& breaks, double scale, double tol) {
    double b = a + 4.0 * scale;
    std::vector<double> pts{a};
    for (double c : breaks)
        if (c > a + 1e-13 && c < b - 1e-13) pts.push_back(c);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) total += mass_finite(rho, pts[i], pts[i + 1], tol);
    total += mass_far_ray(rho, b, tol);
    return total;
}

}  // namespace

double mu_mass(const ModelParams& p, double xi, int j, double tol) {
    if (j < 1 || j > 3) throw std::invalid_argument("mu_mass: j must be 1, 2 or 3");
    MuEvaluator ev(p, xi, j);
    auto rho = [&](double c) { return ev.density(c); };
    std::vector<double> breaks = interior_breaks(ev.bd, j);
    double scale = std::max({1.0, ev.bd.alpha, ev.bd.gamma, ev.bd.delta});

    double total = 0.0;
    for (const auto& iv : ev.bd.support(j).parts) {
        if (std::isfinite(iv.lo) && std::isfinite(iv.hi)) {
            std::vector<double> pts{iv.lo};
            for (double c : breaks)
                if (c > iv.lo + 1e-13 && c < iv.hi - 1e-13) pts.push_back(c);
            pts.push_back(iv.hi);
            std::sort(pts.begin(), pts.end());
            for (size_t i = 0; i + 1 < pts.size(); ++i)
                total += mass_finite(rho, pts[i], pts[i + 1], tol);
        } else if (std::isfinite(iv.lo)) {
            total += mass_ray(rho, iv.lo, breaks, scale, tol);
        } else if (std::isfinite(iv.hi)) {
            auto refl = [&](double c) { return ev.density(-c); };
            total += mass_ray(refl, -iv.hi, breaks, scale, tol);
        } else {
            total += mass_ray(rho, 0.0, breaks, scale, tol);
            auto refl = [&](double c) { return ev.density(-c); };
            total += mass_ray(refl, 0.0, breaks, scale, tol);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// xi-averages
// ---------------------------------------------------------------------------

namespace {

// integral of f over [a, b] with an optional sqrt-type zero at one end
// (substitute xi = end -/+ s^2 there)
double integrate_xi_panel(const std::function<double(double)>& f, double a, double b,
                          bool sqrt_at_hi, bool sqrt_at_lo, double tol) {
    if (!(b > a)) return 0.0;
    if (sqrt_at_hi) {
        double smax = std::sqrt(b - a);
        return adaptive_integrate([&](double s) { return 2.0 * s * f(b - s * s); }, 0.0, smax,
                                  tol);
    }
    if (sqrt_at_lo) {
        double smax = std::sqrt(b - a);
        return adaptive_integrate([&](double s) { return 2.0 * s * f(a + s * s); }, 0.0, smax,
                                  tol);
    }
    return adaptive_integrate(f, a, b, tol);
}

// integral of f(xi) over [lo, hi], split at xi_cr, sqrt substitution applied
// on the panel that touches xi_star (entering/leaving the support family)
double integrate_over_xi(const std::function<double(double)>& f, double lo, double hi,
                         double xicr, bool sqrt_lo, bool sqrt_hi, double tol) {
    if (!(hi > lo)) return 0.0;
    if (xicr > lo * (1.0 + 1e-14) && xicr < hi * (1.0 - 1e-14)) {
        return integrate_xi_panel(f, lo, xicr, false, sqrt_lo, tol) +
               integrate_xi_panel(f, xicr, hi, sqrt_hi, false, tol);
    }
    return integrate_xi_panel(f, lo, hi, sqrt_hi, sqrt_lo, tol);
}

}  // namespace

double nu_density(const ModelParams& p, int j, double coord) {
    if (j < 1 || j > 3) throw std::invalid_argument("nu_density: j must be 1, 2 or 3");
    double xicr = xi_critical(p);
    double xs = xi_star(p, coord, j);
    auto f = [&](double xi) { return MuEvaluator(p, xi, j).density(coord); };
    if (j == 2) {
        if (std::isinf(xs)) return 0.0;
        double hi = std::min(xs, 1.0);
        return integrate_over_xi(f, 0.0, hi, xicr, false, xs <= 1.0, 1e-7);
    }
    if (std::isinf(xs) || xs >= 1.0) return 0.0;
    return integrate_over_xi(f, xs, 1.0, xicr, xs > 0.0, false, 1e-7);
}

double nu_mass(const ModelParams& p, int j, double tol) {
    // the integrand is the constant per-xi mass up to quadrature noise, so a
    // fixed composite rule is both cheaper and steadier than refinement
    double xicr = xi_critical(p);
    auto f = [&](double xi) { return mu_mass(p, xi, j, tol); };
    double total = 0.0;
    if (xicr > 0.0 && xicr < 1.0) {
        total += gl_integrate(f, 0.0, xicr, 16);
        total += gl_integrate(f, xicr, 1.0, 16);
    } else {
        total += gl_integrate(f, 0.0, 1.0, 16);
    }
    return total;
}

double sigma_tilde_density(const ModelParams& p, double y) {
    double xs = xi_star(p, y, 2);
    if (std::isinf(xs) || !(xs > 0.0)) return 0.0;
    double xicr = xi_critical(p);
    auto f = [&](double xi) { return MuEvaluator(p, xi, 2).density(y); };
    return integrate_over_xi(f, 0.0, xs, xicr, false, true, 1e-7);
}

// ---------------------------------------------------------------------------
// F/G functions and integrated fields
// ---------------------------------------------------------------------------

complex fg_function(const ModelParams& p, double xi, complex z, int j, FGKind kind) {
    if (j < 1 || j > 4) throw std::invalid_argument("fg_function: j must be in 1..4");
    double xicr = xi_critical(p);
    if (kind == FGKind::F) {
        if (!(xi >= xicr)) throw RegimeError("fg_function: F requires xi >= xi_cr");
        LimitCoefficients lc = limit_coefficients(p, xi);
        complex w = solve_symbol(symbol_onecut(p, xi), z).w[j - 1];
        return z - p.tau * p.tau * lc.a / w - w;
    }
    if (!(p.t < p.tau * p.tau) || !(xi > 0.0) || !(xi < xicr))
        throw RegimeError("fg_function: G requires t < tau^2 and 0 < xi < xi_cr");
    complex w = solve_symbol_doubled(p, xi, z * z).w[j - 1];
    return z * xi / (w + xi);
}

namespace {

// log |w_a / w_{a+1}| for the pair (1,2) or (3,4) at real x; roots of the
// doubled symbol at x^2 below xi_cr.
double pair_log_ratio(const ModelParams& p, double xi, double xicr, int first, double x) {
    if (xi >= xicr) {
        RootQuadruple rq = solve_symbol(symbol_onecut(p, xi), complex(x, 0.0));
        return 0.5 * std::log(std::norm(rq.w[first]) / std::norm(rq.w[first + 1]));
    }
    RootQuadruple rq = solve_symbol_doubled(p, xi, complex(x * x, 0.0));
    return 0.5 * std::log(std::norm(rq.w[first]) / std::norm(rq.w[first + 1]));
}

}  // namespace

double integrated_field(const ModelParams& p, Field which, double x) {
    int j = (which == Field::V1) ? 1 : 3;
    int first = (which == Field::V1) ? 0 : 2;
    double xicr = xi_critical(p);
    double xs = xi_star(p, x, j);
    if (!(xs > 0.0) || std::isinf(xs)) return 0.0;

    auto f = [&](double xi) { return pair_log_ratio(p, xi, xicr, first, x); };
    double total = 0.0;
    double head = std::min(xicr, xs);
    if (head > 0.0)
        total += 0.5 * integrate_xi_panel(f, 0.0, head, xs <= xicr, false, 1e-8);
    if (xs > xicr) total += integrate_xi_panel(f, xicr, xs, true, false, 1e-8);
    return total;
}

// ---------------------------------------------------------------------------
// sampled measures
// ---------------------------------------------------------------------------

namespace {

double cell_mass(double s0, double s1, double v0, double v1, bool powerlaw) {
    if (powerlaw && v0 > 0.0 && v1 > 0.0 && s0 * s1 > 0.0) {
        double a0 = std::abs(s0), a1 = std::abs(s1);
        if (a1 < a0) std::swap(a0, a1), std::swap(v0, v1);
        double k = std::log(v1 / v0) / std::log(a1 / a0);
        if (std::abs(k + 1.0) > 1e-8) return (v1 * a1 - v0 * a0) / (k + 1.0);
        return v0 * a0 * std::log(a1 / a0);
    }
    return 0.5 * (v0 + v1) * (s1 - s0);
}

}  // namespace

double MeasureDensity::numeric_mass() const {
    double total = 0.0;
    for (size_t c = 0; c < comp_begin.size(); ++c) {
        for (int i = comp_begin[c]; i + 1 < comp_end[c]; ++i)
            total += cell_mass(grid[i], grid[i + 1], values[i], values[i + 1],
                               powerlaw_cell[i] != 0);
    }
    for (const auto& pm : point_mass) total += pm.mass;
    return total;
}

namespace {

struct MeasureBuilder {
    MeasureDensity m;
    std::function<double(double)> rho;
    double tol = 1e-8;

    double eval(double c) const {
        double v = rho(c);
        if (v < -1e-12) throw std::logic_error("measure density came out negative");
        return std::max(v, 0.0);
    }

    // Chebyshev-midpoint section on [a,b]; the uncovered end slivers are
    // added as point masses computed by quadrature.
    void add_finite(double a, double b, int n, bool sliver_lo, bool sliver_hi) {
        int begin = static_cast<int>(m.grid.size());
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i) xs[i] = mid - half * std::cos(M_PI * (i + 0.5) / n);
        for (double x : xs) {
            m.grid.push_back(x);
            m.values.push_back(eval(x));
            m.powerlaw_cell.push_back(0);
        }
        if (sliver_lo && xs.front() > a) {
            double w = xs.front() - a;
            double ms = adaptive_integrate(
                [&](double s) { return 2.0 * s * eval(a + s * s); }, 0.0, std::sqrt(w), tol);
            if (ms > 0.0) m.point_mass.push_back({a + w / 3.0, ms});
        }
        if (sliver_hi && b > xs.back()) {
            double w = b - xs.back();
            double ms = adaptive_integrate(
                [&](double s) { return 2.0 * s * eval(b - s * s); }, 0.0, std::sqrt(w), tol);
            if (ms > 0.0) m.point_mass.push_back({b - w / 3.0, ms});
        }
    }

    // log-spaced far section on [b, cutoff] plus a power-law tail block
    void add_far_ray(double b, double cutoff, double dlog) {
        int n = std::max(16, static_cast<int>(std::log(cutoff / b) / dlog));
        for (int i = 0; i <= n; ++i) {
            double s = b * std::exp(dlog * i);
            m.grid.push_back(s);
            m.values.push_back(eval(s));
            m.powerlaw_cell.push_back(1);
        }
        double far = m.grid.back();
        double v_far = m.values.back();
        if (v_far > 0.0) {
            double v_mid = eval(far * 0.5);
            double kappa = std::log(v_mid / v_far) / std::log(2.0);
            kappa = std::min(std::max(kappa, 1.05), 6.0);
            double tail = mass_far_ray([&](double s) { return eval(s); }, far, tol);
            if (tail > 0.0)
                m.point_mass.push_back({far * std::exp(1.0 / (kappa - 1.0)), tail});
        }
    }

    void close_component() {
        int end = static_cast<int>(m.grid.size());
        int begin = m.comp_end.empty() ? 0 : m.comp_end.back();
        if (end > begin) {
            m.comp_begin.push_back(begin);
            m.comp_end.push_back(end);
        }
    }
};

// Build one symmetric measure given the positive-side support description.
MeasureDensity build_symmetric(CutAxis axis, const SupportSet& support,
                               const std::function<double(double)>& rho_abs,
                               const std::vector<double>& breaks, double scale,
                               double declared, const SampleOptions& opt) {
    MeasureBuilder bld;
    bld.rho = rho_abs;  // density as a function of |coord| (measures are even)
    bld.m.support = support;
    bld.m.declared_mass = declared;

    // positive-side components, asc
    struct Piece {
        double a;
        double b;  // +inf for a ray
    };
    std::vector<Piece> pieces;
    for (const auto& iv : support.parts) {
        double lo = iv.lo, hi = iv.hi;
        if (hi <= 0.0 && std::isfinite(hi)) continue;  // mirror of a positive part
        if (!std::isfinite(lo)) lo = 0.0;              // full line: take [0, inf)
        lo = std::max(lo, 0.0);
        pieces.push_back({lo, hi});
    }
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.a < b.a; });

    for (const auto& pc : pieces) {
        if (std::isfinite(pc.b)) {
            std::vector<double> pts{pc.a};
            for (double c : breaks)
                if (c > pc.a + 1e-12 && c < pc.b - 1e-12) pts.push_back(c);
            pts.push_back(pc.b);
            std::sort(pts.begin(), pts.end());
            for (size_t i = 0; i + 1 < pts.size(); ++i)
                bld.add_finite(pts[i], pts[i + 1], opt.n_finite, i == 0, i + 2 == pts.size());
            bld.close_component();
        } else {
            double near_end = pc.a + 4.0 * scale;
            std::vector<double> pts{pc.a};
            for (double c : breaks)
                if (c > pc.a + 1e-12 && c < near_end - 1e-12) pts.push_back(c);
            pts.push_back(near_end);
            std::sort(pts.begin(), pts.end());
            for (size_t i = 0; i + 1 < pts.size(); ++i)
                bld.add_finite(pts[i], pts[i + 1], opt.n_ray_near, i == 0, false);
            bld.add_far_ray(near_end, std::max(opt.ray_cutoff, 100.0 * near_end), opt.dlog);
            bld.close_component();
        }
    }

    // mirror to the negative side: negative half reversed, then positive half
    MeasureDensity& m = bld.m;
    MeasureDensity out;
    out.support = m.support;
    out.declared_mass = m.declared_mass;
    int n = static_cast<int>(m.grid.size());
    for (int i = n - 1; i >= 0; --i) {
        out.grid.push_back(-m.grid[i]);
        out.values.push_back(m.values[i]);
    }
    for (int i = 0; i < n; ++i) {
        out.grid.push_back(m.grid[i]);
        out.values.push_back(m.values[i]);
    }
    out.powerlaw_cell.assign(out.grid.empty() ? 0 : out.grid.size() - 1, 0);
    for (int i = 0; i + 1 < n; ++i) {
        out.powerlaw_cell[n - 2 - i] = m.powerlaw_cell[i];
        out.powerlaw_cell[n + i] = m.powerlaw_cell[i];
    }
    std::vector<std::pair<int, int>> comps;
    for (size_t c = 0; c < m.comp_begin.size(); ++c) {
        comps.push_back({n - m.comp_end[c], n - m.comp_begin[c]});
        comps.push_back({n + m.comp_begin[c], n + m.comp_end[c]});
    }
    std::sort(comps.begin(), comps.end());
    // a component starting at the origin joins its mirror image into one run
    bool zero_join = !pieces.empty() && pieces.front().a == 0.0;
    for (const auto& cp : comps) {
        if (zero_join && !out.comp_end.empty() && out.comp_end.back() == n && cp.first == n) {
            out.comp_end.back() = cp.second;
        } else {
            out.comp_begin.push_back(cp.first);
            out.comp_end.push_back(cp.second);
        }
    }
    for (const auto& pm : m.point_mass) {
        out.point_mass.push_back({-pm.coord, pm.mass});
        out.point_mass.push_back({pm.coord, pm.mass});
    }
    return out;
}

}  // namespace

MeasureDensity sample_nu(const ModelParams& p, int j, const SampleOptions& opt) {
    BranchData bd1 = branch_points(p, 1.0);
    double scale = std::max({1.0, bd1.alpha, bd1.gamma, bd1.delta});
    SupportSet sup;
    double declared;
    std::vector<double> breaks;
    if (j == 1) {
        sup = bd1.gamma1;
        declared = 1.0;
    } else if (j == 2) {
        double y0 = (p.t >= 0.0) ? y_star_of(p) : 0.0;  // gamma(0+)
        if (y0 > 0.0)
            sup = SupportSet{CutAxis::imaginary,
                             {{-std::numeric_limits<double>::infinity(), -y0},
                              {y0, std::numeric_limits<double>::infinity()}}};
        else
            sup = SupportSet{CutAxis::imaginary,
                             {{-std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()}}};
        declared = 2.0 / 3.0;
        breaks = {bd1.gamma};  // kink where the constraint stops being active
    } else if (j == 3) {
        sup = bd1.gamma3;
        declared = 1.0 / 3.0;
        breaks = {x_star_of(p), bd1.alpha, bd1.beta, bd1.delta};
    } else {
        throw std::invalid_argument("sample_nu: j must be 1, 2 or 3");
    }

    std::function<double(double)> rho;
    if (j == 2) {
        // clamp to the constraint: theory gives nu_2 <= sigma, numerics may
        // overshoot by the quadrature tolerance on the active part
        rho = [p](double c) {
            double v = nu_density(p, 2, c);
            return std::min(v, sigma_density(p, c));
        };
    } else {
        int jj = j;
        rho = [p, jj](double c) { return nu_density(p, jj, c); };
    }
    return build_symmetric(sup.axis, sup, rho, breaks, scale, declared, opt);
}

MeasureDensity sample_mu(const ModelParams& p, double xi, int j, const SampleOptions& opt) {
    MuEvaluator ev(p, xi, j);
    double scale = std::max({1.0, ev.bd.alpha, ev.bd.gamma, ev.bd.delta});
    double declared = (j == 1) ? 1.0 : (j == 2 ? 2.0 / 3.0 : 1.0 / 3.0);
    auto rho = [p, xi, j](double c) { return MuEvaluator(p, xi, j).density(c); };
    return build_symmetric(ev.bd.support(j).axis, ev.bd.support(j), rho,
                           interior_breaks(ev.bd, j), scale, declared, opt);
}

// ---------------------------------------------------------------------------
// logarithmic potential and energy
// ---------------------------------------------------------------------------

namespace {

// antiderivatives of (1/2) log(u^2+q^2) and u * (1/2) log(u^2+q^2)
double L1(double u, double q) {
    if (u == 0.0) return 0.0;
    if (q == 0.0) return u * std::log(std::abs(u)) - u;
    return 0.5 * (u * std::log(u * u + q * q) - 2.0 * u) + q * std::atan(u / q);
}
double L2(double u, double q) {
    double r2 = u * u + q * q;
    if (r2 == 0.0) return 0.0;
    return 0.25 * (r2 * std::log(r2) - u * u);
}

}  // namespace

double log_potential(const MeasureDensity& m, complex z) {
    bool imag = m.support.axis == CutAxis::imaginary;
    double pp = imag ? z.imag() : z.real();
    double qq = imag ? z.real() : z.imag();
    double acc = 0.0;
    for (size_t c = 0; c < m.comp_begin.size(); ++c) {
        for (int i = m.comp_begin[c]; i + 1 < m.comp_end[c]; ++i) {
            double s0 = m.grid[i], s1 = m.grid[i + 1];
            double v0 = m.values[i], v1 = m.values[i + 1];
            double h = s1 - s0;
            if (!(h > 0.0)) continue;
            double slope = (v1 - v0) / h;
            double u0 = s0 - pp, u1 = s1 - pp;
            double A = v0 - slope * u0;
            acc += A * (L1(u1, qq) - L1(u0, qq)) + slope * (L2(u1, qq) - L2(u0, qq));
        }
    }
    for (const auto& pm : m.point_mass) {
        double u = pm.coord - pp;
        double d2 = u * u + qq * qq;
        acc += pm.mass * 0.5 * std::log(std::max(d2, 1e-300));
    }
    return -acc;
}

namespace {

// int f dm over the sampled measure (f given at arbitrary coords)
double integrate_against(const MeasureDensity& m, const std::function<double(double)>& f) {
    double acc = 0.0;
    for (size_t c = 0; c < m.comp_begin.size(); ++c)
        for (int i = m.comp_begin[c]; i + 1 < m.comp_end[c]; ++i) {
            double ms = cell_mass(m.grid[i], m.grid[i + 1], m.values[i], m.values[i + 1],
                                  m.powerlaw_cell[i] != 0);
            acc += ms * 0.5 * (f(m.grid[i]) + f(m.grid[i + 1]));
        }
    for (const auto& pm : m.point_mass) acc += pm.mass * f(pm.coord);
    return acc;
}

double mutual_energy(const MeasureDensity& a, const MeasureDensity& b) {
    return integrate_against(
        a, [&](double c) { return log_potential(b, axis_point(a.support.axis, c)); });
}

}  // namespace

double energy_functional(const MeasureDensity& m1, const MeasureDensity& m2,
                         const MeasureDensity& m3, const ModelParams& p) {
    double mm1 = m1.numeric_mass(), mm2 = m2.numeric_mass(), mm3 = m3.numeric_mass();
    if (std::abs(mm1 - 1.0) > 2e-4 || std::abs(mm2 - 2.0 / 3.0) > 2e-4 ||
        std::abs(mm3 - 1.0 / 3.0) > 2e-4)
        throw std::invalid_argument("energy_functional: masses must be (1, 2/3, 1/3)");
    for (size_t i = 0; i < m2.grid.size(); ++i) {
        if (m2.values[i] > sigma_density(p, m2.grid[i]) + 1e-9)
            throw std::invalid_argument("energy_functional: constraint m2 <= sigma violated");
    }
    double e = mutual_energy(m1, m1) - mutual_energy(m1, m2) + mutual_energy(m2, m2) -
               mutual_energy(m2, m3) + mutual_energy(m3, m3);
    e += integrate_against(m1, [&](double x) { return external_field(p, Field::V1, x); });
    e += integrate_against(m3, [&](double x) { return external_field(p, Field::V3, x); });
    return e;
}

MeasureDensity perturb_measure(const MeasureDensity& m, int which, const ModelParams& p,
                               std::uint64_t seed, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    MeasureDensity out = m;

    int n = static_cast<int>(m.grid.size());
    int width = std::max(6, n / 24);
    auto window_ok = [&](int b) {
        if (b < 0 || b + width > n) return false;
        // stay inside one component
        for (size_t c = 0; c < m.comp_begin.size(); ++c)
            if (b >= m.comp_begin[c] && b + width <= m.comp_end[c]) {
                // for the constrained measure stay strictly below sigma
                if (which == 2) {
                    for (int i = b; i < b + width; ++i) {
                        double slack =
                            sigma_density(p, m.grid[i]) - m.values[i];
                        if (slack < 0.2 * (m.values[i] + 1e-3)) return false;
                    }
                }
                for (int i = b; i < b + width; ++i)
                    if (m.values[i] <= 0.0) return false;
                return true;
            }
        return false;
    };

    int wa = -1, wb = -1;
    for (int tries = 0; tries < 4000 && (wa < 0 || wb < 0); ++tries) {
        int cand = static_cast<int>(unif(rng) * (n - width));
        if (!window_ok(cand)) continue;
        if (wa < 0)
            wa = cand;
        else if (std::abs(cand - wa) >= width)
            wb = cand;
    }
    if (wa < 0 || wb < 0)
        throw std::runtime_error("perturb_measure: could not place perturbation windows");

    auto bump = [&](int b, int i) {
        double t01 = (i - b + 0.5) / width;
        return 0.5 * (1.0 - std::cos(2.0 * M_PI * t01));
    };
    // raise window A, lower window B by a factor chosen to conserve mass
    for (int i = wa; i < wa + width; ++i) out.values[i] = m.values[i] * (1.0 + amplitude * bump(wa, i));
    double target = m.numeric_mass();
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        double r = 0.5 * (lo + hi);
        for (int i = wb; i < wb + width; ++i)
            out.values[i] = m.values[i] * (1.0 - r * bump(wb, i));
        double mass = out.numeric_mass();
        if (mass > target)
            lo = r;
        else
            hi = r;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Euler-Lagrange residuals
// ---------------------------------------------------------------------------

namespace {

std::vector<double> support_probe_points(const SupportSet& sup, double span, int count) {
    // interior points over each part, clipped to a finite window
    std::vector<double> pts;
    for (const auto& iv : sup.parts) {
        double lo = std::isfinite(iv.lo) ? iv.lo : -(span + std::abs(iv.hi));
        double hi = std::isfinite(iv.hi) ? iv.hi : (std::isfinite(iv.lo) ? iv.lo + span : span);
        double margin = 0.015 * (hi - lo);
        for (int i = 0; i < count; ++i) {
            double t01 = (i + 0.5) / count;
            pts.push_back(lo + margin + (hi - lo - 2.0 * margin) * t01);
        }
    }
    return pts;
}

}  // namespace

ELReport el_residuals(const ModelParams& p, const ELOptions& opt) {
    ELReport rep;
    BranchData bd1 = branch_points(p, 1.0);
    MeasureDensity n1 = sample_nu(p, 1, opt.sampling);
    MeasureDensity n2 = sample_nu(p, 2, opt.sampling);
    MeasureDensity n3 = sample_nu(p, 3, opt.sampling);

    auto U1 = [&](complex z) { return log_potential(n1, z); };
    auto U2 = [&](complex z) { return log_potential(n2, z); };
    auto U3 = [&](complex z) { return log_potential(n3, z); };

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double alpha = bd1.alpha, beta = bd1.beta, gamma = bd1.gamma, delta = bd1.delta;

    // EL 1 on supp(nu_1)
    {
        auto lhs = [&](double x) {
            return 2.0 * U1(complex(x, 0.0)) - U2(complex(x, 0.0)) +
                   external_field(p, Field::V1, x);
        };
        std::vector<double> pts = support_probe_points(bd1.gamma1, 0.0, opt.support_points);
        double sum = 0.0;
        std::vector<double> vals;
        for (double x : pts) vals.push_back(lhs(x));
        for (double v : vals) sum += v;
        rep.ell = sum / vals.size();
        double worst = 0.0;
        for (double v : vals) worst = std::max(worst, std::abs(v - rep.ell));
        rep.el1.max_equality_residual = worst;
        rep.el1.support_points = static_cast<int>(vals.size());

        double margin = std::numeric_limits<double>::infinity();
        int used = 0;
        for (int i = 0; i < opt.off_points; ++i) {
            double x;
            if (beta > 1e-10 && i % 2 == 0) {
                x = (unif(rng) * 1.9 - 0.95) * beta;
            } else {
                double mag = alpha * (1.01 + unif(rng) * 0.99);
                x = (unif(rng) < 0.5 ? -1.0 : 1.0) * mag;
            }
            if (bd1.gamma1.contains(x)) continue;
            margin = std::min(margin, lhs(x) - rep.ell);
            ++used;
        }
        rep.el1.min_margin = margin;
        rep.el1.off_points = used;
    }

    // EL 2 on supp(sigma~ - nu_2) = Gamma_2(1)
    {
        auto lhs = [&](double y) {
            complex z(0.0, y);
            return -U1(z) + 2.0 * U2(z) - U3(z);
        };
        double span = 2.0 * gamma + 2.0;
        std::vector<double> pts;
        for (int i = 0; i < opt.support_points; ++i) {
            double t01 = (i + 0.5) / opt.support_points;
            double y = gamma + 1e-3 * (1.0 + gamma) + span * t01;
            pts.push_back(i % 2 == 0 ? y : -y);
        }
        double worst = 0.0;
        for (double y : pts) worst = std::max(worst, std::abs(lhs(y)));
        rep.el2.max_equality_residual = worst;
        rep.el2.support_points = static_cast<int>(pts.size());

        double margin = std::numeric_limits<double>::infinity();
        int used = 0;
        if (gamma > 1e-10) {
            for (int i = 0; i < opt.off_points; ++i) {
                double y = (unif(rng) * 1.9 - 0.95) * gamma;
                if (std::abs(y) < 0.02 * gamma) continue;
                margin = std::min(margin, -lhs(y));  // must be negative off support
                ++used;
            }
        }
        rep.el2.min_margin = margin;
        rep.el2.off_points = used;
    }

    // EL 3 on supp(nu_3)
    {
        auto lhs = [&](double x) {
            complex z(x, 0.0);
            return -U2(z) + 2.0 * U3(z) + external_field(p, Field::V3, x);
        };
        double span = 2.0 * std::max(alpha, delta) + 2.0;
        std::vector<double> pts;
        for (int i = 0; i < opt.support_points; ++i) {
            double t01 = (i + 0.5) / opt.support_points;
            double x = delta + 1e-3 * (1.0 + delta) + span * t01;
            pts.push_back(i % 2 == 0 ? x : -x);
        }
        double worst = 0.0;
        for (double x : pts) worst = std::max(worst, std::abs(lhs(x)));
        rep.el3.max_equality_residual = worst;
        rep.el3.support_points = static_cast<int>(pts.size());

        double margin = std::numeric_limits<double>::infinity();
        int used = 0;
        if (delta > 1e-10) {
            for (int i = 0; i < opt.off_points; ++i) {
                double x = (unif(rng) * 1.9 - 0.95) * delta;
                if (std::abs(x) < 0.02 * delta) continue;
                margin = std::min(margin, lhs(x));  // must be positive off support
                ++used;
            }
        }
        rep.el3.min_margin = margin;
        rep.el3.off_points = used;
    }

    // per-xi identity at xi = opt.per_xi
    {
        double xi = opt.per_xi;
        BranchData bd = branch_points(p, xi);
        MeasureDensity mu1 = sample_mu(p, xi, 1, opt.sampling);
        MeasureDensity mu2 = sample_mu(p, xi, 2, opt.sampling);
        double g = bd.regime == Regime::two_cut ? 0.5 : 1.0;
        LaurentSymbol sym =
            bd.regime == Regime::two_cut ? symbol_doubled(p, xi) : symbol_onecut(p, xi);
        auto logratio = [&](complex z) {
            RootQuadruple rq = bd.regime == Regime::two_cut ? solve_symbol_doubled(p, xi, z * z)
                                                            : solve_symbol(sym, z);
            return 0.5 * std::log(std::norm(rq.w[0]) / std::norm(rq.w[1]));
        };
        // fit ell^xi on Gamma_1(xi) where the log term vanishes
        std::vector<double> pts = support_probe_points(bd.gamma1, 0.0, 12);
        double ell = 0.0;
        for (double x : pts)
            ell += 2.0 * log_potential(mu1, complex(x, 0.0)) -
                   log_potential(mu2, complex(x, 0.0));
        ell /= pts.size();
        rep.per_xi_ell = ell;

        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            complex z;
            if (i < 5)
                z = complex(bd.alpha * (1.08 + 0.18 * i), 0.0);
            else
                z = complex(0.0, std::max(bd.gamma, 0.3) * (0.25 + 0.45 * (i - 5)));
            double lhs = ell - 2.0 * log_potential(mu1, z) + log_potential(mu2, z);
            worst = std::max(worst, std::abs(lhs - g * logratio(z)));
        }
        rep.per_xi_max_residual = worst;
    }

    return rep;
}

// ---------------------------------------------------------------------------
// nu_1 CDF
// ---------------------------------------------------------------------------

double Nu1Cdf::operator()(double t) const {
    if (x.empty()) return 0.0;
    if (t <= x.front()) return 0.0;
    if (t >= x.back()) return F.back();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    size_t i = static_cast<size_t>(it - x.begin()) - 1;
    double w = (t - x[i]) / (x[i + 1] - x[i]);
    return F[i] + w * (F[i + 1] - F[i]);
}

Nu1Cdf build_nu1_cdf(const ModelParams& p, int points_per_component) {
    SampleOptions opt;
    opt.n_finite = points_per_component;
    MeasureDensity m = sample_nu(p, 1, opt);
    Nu1Cdf cdf;
    double acc = 0.0;
    // point masses at slivers are tiny for nu_1; fold them in where they sit
    size_t pm_idx = 0;
    std::vector<PointMass> pms(m.point_mass.begin(), m.point_mass.end());
    std::sort(pms.begin(), pms.end(),
              [](const PointMass& a, const PointMass& b) { return a.coord < b.coord; });
    cdf.x.push_back(m.grid.front() - 1e-9);
    cdf.F.push_back(0.0);
    for (size_t c = 0; c < m.comp_begin.size(); ++c) {
        for (int i = m.comp_begin[c]; i + 1 < m.comp_end[c]; ++i) {
            while (pm_idx < pms.size() && pms[pm_idx].coord <= m.grid[i]) {
                acc += pms[pm_idx].mass;
                ++pm_idx;
            }
            acc += cell_mass(m.grid[i], m.grid[i + 1], m.values[i], m.values[i + 1],
                             m.powerlaw_cell[i] != 0);
            cdf.x.push_back(m.grid[i + 1]);
            cdf.F.push_back(acc);
        }
    }
    while (pm_idx < pms.size()) {
        acc += pms[pm_idx].mass;
        ++pm_idx;
    }
    cdf.x.push_back(m.grid.back() + 1e-9);
    cdf.F.push_back(acc);
    return cdf;
}

}  // namespace q2mm
