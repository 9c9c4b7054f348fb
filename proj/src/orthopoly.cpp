#include "q2mm/orthopoly.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "q2mm/quadrature.hpp"

namespace q2mm {

namespace {

// exponent polynomial of the weight: phi(y) = y^4/4 + (t - tau^2) y^2 / 2
double weight_exponent(double y, double delta) { return 0.25 * y * y * y * y + 0.5 * delta * y * y; }

struct WeightGrid {
    std::vector<double> x;
    std::vector<double> sqw;  // sqrt of the quadrature weight times the weight function
};

WeightGrid make_grid(int n, double delta, double L, int nodes_per_unit) {
    // composite Gauss-Legendre panels of unit length on [-L, L]
    const auto& rule = GaussLegendre::get(32);
    int panels = std::max(2, static_cast<int>(std::ceil(2.0 * L)));
    int per_panel = std::max(8, nodes_per_unit);
    double shift = (delta < 0.0) ? -0.25 * delta * delta : 0.0;  // min of phi
    WeightGrid g;
    for (int p = 0; p < panels; ++p) {
        double a = -L + 2.0 * L * p / panels;
        double b = -L + 2.0 * L * (p + 1) / panels;
        int reps = (per_panel + 31) / 32;
        for (int r = 0; r < reps; ++r) {
            double aa = a + (b - a) * r / reps;
            double bb = a + (b - a) * (r + 1) / reps;
            double mid = 0.5 * (aa + bb), half = 0.5 * (bb - aa);
            for (size_t i = 0; i < rule.nodes.size(); ++i) {
                double x = mid + half * rule.nodes[i];
                double w = half * rule.weights[i] *
                           std::exp(-n * (weight_exponent(x, delta) - shift));
                g.x.push_back(x);
                g.sqw.push_back(std::sqrt(w));
            }
        }
    }
    return g;
}

// Lanczos with full reorthogonalization on diag(x) against the discrete
// weighted inner product; returns a_k = beta_k^2, k = 0..K.
std::vector<double> stieltjes(const WeightGrid& g, int K) {
    size_t N = g.x.size();
    std::vector<std::vector<double>> basis;
    basis.reserve(K + 1);
    std::vector<double> v(N);
    double nrm = 0.0;
    for (size_t i = 0; i < N; ++i) {
        v[i] = g.sqw[i];
        nrm += v[i] * v[i];
    }
    nrm = std::sqrt(nrm);
    for (auto& vi : v) vi /= nrm;
    basis.push_back(v);

    std::vector<double> a(K + 1, 0.0);
    std::vector<double> w(N);
    for (int k = 0; k < K; ++k) {
        const auto& vk = basis.back();
        for (size_t i = 0; i < N; ++i) w[i] = g.x[i] * vk[i];
        if (k > 0) {
            const auto& vk1 = basis[basis.size() - 2];
            double beta = std::sqrt(a[k]);
            for (size_t i = 0; i < N; ++i) w[i] -= beta * vk1[i];
        }
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& u : basis) {
                double d = 0.0;
                for (size_t i = 0; i < N; ++i) d += w[i] * u[i];
                for (size_t i = 0; i < N; ++i) w[i] -= d * u[i];
            }
        }
        double beta2 = 0.0;
        for (size_t i = 0; i < N; ++i) beta2 += w[i] * w[i];
        a[k + 1] = beta2;
        double beta = std::sqrt(beta2);
        if (!(beta > 0.0)) throw PrecisionError("stieltjes: recurrence broke down");
        for (size_t i = 0; i < N; ++i) w[i] /= beta;
        basis.push_back(w);
    }
    return a;
}

}  // namespace

RecurrenceTable compute_recurrence(const ModelParams& p, int n, int K) {
    if (n < 1) throw std::invalid_argument("compute_recurrence: n must be >= 1");
    if (K < 1 || K > 2 * n) throw std::invalid_argument("compute_recurrence: need 1 <= K <= 2n");
    double delta = p.t - p.tau * p.tau;

    // truncate where the (shifted) weight drops below ~1e-33
    double shift = (delta < 0.0) ? -0.25 * delta * delta : 0.0;
    double L = std::max(2.0, std::sqrt(2.0 * std::abs(delta)));
    while (n * (weight_exponent(L, delta) - shift) < 76.0) L += 0.1;

    std::vector<double> a_prev;
    int nodes_per_unit = 512;
    for (int round = 0; round < 4; ++round) {
        WeightGrid g = make_grid(n, delta, L, nodes_per_unit);
        std::vector<double> a = stieltjes(g, K);
        if (!a_prev.empty()) {
            double worst = 0.0;
            for (int k = 0; k <= K; ++k) worst = std::max(worst, std::abs(a[k] - a_prev[k]));
            if (worst <= 1e-10) {
                a_prev = a;
                break;
            }
        }
        a_prev = a;
        nodes_per_unit *= 2;
        if (round == 3) throw PrecisionError("compute_recurrence: quadrature did not converge");
    }

    RecurrenceTable tab;
    tab.n = n;
    tab.t = p.t;
    tab.tau = p.tau;
    tab.a = a_prev;
    tab.b.assign(K + 1, 0.0);
    tab.c.assign(K + 1, 0.0);
    double tau2 = p.tau * p.tau;
    for (int k = 1; k <= K; ++k) tab.b[k] = tau2 * tab.a[k] + static_cast<double>(k) / n;
    for (int k = 3; k <= K; ++k) tab.c[k] = tau2 * tab.a[k - 2] * tab.a[k - 1] * tab.a[k];
    return tab;
}

PolyValue p_eval(const RecurrenceTable& tab, double x, int k) {
    if (k < 0) throw std::invalid_argument("p_eval: k must be nonnegative");
    if (k > 0 && static_cast<size_t>(k - 1) >= tab.b.size())
        throw std::invalid_argument("p_eval: table too short for requested degree");
    // rolling state (p_m, p_{m-1}, p_{m-2}, p_{m-3}), rescaled each step
    double s0 = 1.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    double log_scale = 0.0;
    for (int m = 0; m < k; ++m) {
        double b = (m >= 1) ? tab.b[m] : 0.0;
        double c = (m >= 3) ? tab.c[m] : 0.0;
        double next = x * s0 - b * s1 - c * s3;
        s3 = s2;
        s2 = s1;
        s1 = s0;
        s0 = next;
        double mag = std::max({std::abs(s0), std::abs(s1), std::abs(s2), std::abs(s3)});
        if (mag > 0.0 && (mag > 1e100 || mag < 1e-100)) {
            s0 /= mag;
            s1 /= mag;
            s2 /= mag;
            s3 /= mag;
            log_scale += std::log(mag);
        }
    }
    PolyValue out;
    out.sign = (s0 > 0.0) - (s0 < 0.0);
    out.log_abs = (s0 == 0.0) ? -std::numeric_limits<double>::infinity()
                              : std::log(std::abs(s0)) + log_scale;
    return out;
}

ZeroSet p_zeros(const ModelParams& p, int n, int k) {
    if (k < 1 || k > n) throw std::invalid_argument("p_zeros: need 1 <= k <= n");
    RecurrenceTable tab = compute_recurrence(p, n, std::min(2 * n, k + 1));
    double M = branch_points(p, 1.0).alpha + 1.0;

    for (int attempt = 0; attempt < 4; ++attempt) {
        int grid = 80 * k * (1 << attempt);  // step M/(40k), halved on retry
        std::vector<double> zeros;
        double x_prev = -M;
        int s_prev = p_eval(tab, x_prev, k).sign;
        for (int i = 1; i <= grid; ++i) {
            double x = -M + 2.0 * M * i / grid;
            int s = p_eval(tab, x, k).sign;
            if (s == 0) {
                zeros.push_back(x);
            } else if (s_prev != 0 && s != s_prev) {
                double lo = x_prev, hi = x;
                int s_lo = s_prev;
                while (hi - lo > 1e-12) {
                    double mid = 0.5 * (lo + hi);
                    int sm = p_eval(tab, mid, k).sign;
                    if (sm == 0) {
                        lo = hi = mid;
                        break;
                    }
                    if (sm == s_lo)
                        lo = mid;
                    else
                        hi = mid;
                }
                zeros.push_back(0.5 * (lo + hi));
            }
            x_prev = x;
            s_prev = s;
        }
        if (static_cast<int>(zeros.size()) == k) {
            ZeroSet zs;
            zs.k = k;
            zs.n = n;
            zs.zeros = std::move(zeros);
            zs.bound = M;
            return zs;
        }
    }
    throw PrecisionError("p_zeros: zero count mismatch after grid refinement");
}

std::vector<double> p_zeros_eigen(const RecurrenceTable& tab, int k) {
    if (k < 1 || static_cast<size_t>(k) > tab.b.size())
        throw std::invalid_argument("p_zeros_eigen: table too short");
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
    for (int r = 0; r + 1 < k; ++r) M(r, r + 1) = 1.0;
    for (int r = 1; r < k; ++r) M(r, r - 1) = tab.b[r];
    for (int r = 3; r < k; ++r) M(r, r - 3) = tab.c[r];
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    std::vector<double> zeros(k);
    for (int i = 0; i < k; ++i) zeros[i] = es.eigenvalues()(i).real();
    std::sort(zeros.begin(), zeros.end());
    return zeros;
}

InterlacingResult interlacing_check(const ZeroSet& z1, const ZeroSet& z2, InterlaceMode mode) {
    std::vector<double> a, b;
    if (mode == InterlaceMode::consecutive) {
        if (z2.k != z1.k + 1) throw std::invalid_argument("interlacing_check: need degrees k, k+1");
        a = z1.zeros;
        b = z2.zeros;
    } else {
        if (z2.k != z1.k + 2) throw std::invalid_argument("interlacing_check: need degrees k, k+2");
        double tol = 1e-9 * std::max(z1.bound, 1.0);
        for (double x : z1.zeros)
            if (x > tol) a.push_back(x);
        for (double x : z2.zeros)
            if (x > tol) b.push_back(x);
    }
    InterlacingResult res;
    if (b.size() != a.size() + 1) return res;  // ok = false
    // strict alternation b[0] < a[0] < b[1] < ... < a[m-1] < b[m]
    double margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (size_t i = 0; i < a.size(); ++i) {
        ok = ok && (b[i] < a[i]) && (a[i] < b[i + 1]);
        margin = std::min({margin, a[i] - b[i], b[i + 1] - a[i]});
    }
    res.ok = ok;
    res.margin = margin;
    return res;
}

KSResult empirical_vs_nu1(const ModelParams& p, int n) {
    if (n < 10) throw std::invalid_argument("empirical_vs_nu1: n must be >= 10");
    ZeroSet zs = p_zeros(p, n, n);
    Nu1Cdf cdf = build_nu1_cdf(p);
    KSResult res;
    for (int i = 1; i <= n; ++i) {
        double F = cdf(zs.zeros[i - 1]);
        res.ks = std::max(res.ks, std::abs(F - static_cast<double>(i) / n));
        res.ks = std::max(res.ks, std::abs(F - static_cast<double>(i - 1) / n));
    }
    int bins = 40;
    res.bin_edges.resize(bins + 1);
    res.freq.assign(bins, 0.0);
    for (int i = 0; i <= bins; ++i) res.bin_edges[i] = -zs.bound + 2.0 * zs.bound * i / bins;
    for (double x : zs.zeros) {
        int b = std::min(bins - 1, static_cast<int>((x + zs.bound) / (2.0 * zs.bound) * bins));
        res.freq[std::max(b, 0)] += 1.0 / n;
    }
    return res;
}

}  // namespace q2mm
