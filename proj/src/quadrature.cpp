#include "q2mm/quadrature.hpp"

#include <map>
#include <mutex>
#include <queue>

namespace q2mm {

namespace {

GaussLegendre make_rule(int n) {
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Legendre P_n(x) and P_n'(x) by recurrence
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const GaussLegendre& GaussLegendre::get(int n) {
    static std::map<int, GaussLegendre> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
    return it->second;
}

double gl_integrate(const std::function<double(double)>& f, double a, double b, int order) {
    const auto& rule = GaussLegendre::get(order);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < order; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

namespace {

struct Segment {
    double a, b, val, err;
    int depth;
};

struct WorseError {
    bool operator()(const Segment& x, const Segment& y) const { return x.err < y.err; }
};

Segment make_segment(const std::function<double(double)>& f, double a, double b, int depth) {
    double coarse = gl_integrate(f, a, b, 10);
    double fine = gl_integrate(f, a, b, 20);
    return {a, b, fine, std::abs(fine - coarse), depth};
}

}  // namespace

// Global-error worklist refinement: always split the segment with the largest
// error estimate until the summed error meets the relative tolerance (or the
// estimates stop being trustworthy).
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth) {
    if (a == b) return 0.0;
    std::priority_queue<Segment, std::vector<Segment>, WorseError> open;
    open.push(make_segment(f, a, b, 0));
    double done_val = 0.0, done_err = 0.0;
    double open_val = open.top().val, open_err = open.top().err;

    int splits = 0;
    const int max_splits = 900;
    while (!open.empty() && splits < max_splits) {
        double total = std::abs(done_val + open_val);
        if (done_err + open_err <= tol * std::max(total, 1e-300)) break;
        Segment s = open.top();
        open.pop();
        open_val -= s.val;
        open_err -= s.err;
        if (s.depth >= max_depth) {
            done_val += s.val;
            done_err += s.err;
            continue;
        }
        double mid = 0.5 * (s.a + s.b);
        Segment l = make_segment(f, s.a, mid, s.depth + 1);
        Segment r = make_segment(f, mid, s.b, s.depth + 1);
        // a split that does not shrink the error estimate means the segment is
        // at the integrand's own noise level; freeze it
        if (s.depth >= 5 && l.err + r.err > 0.9 * s.err) {
            done_val += s.val;
            done_err += s.err;
            continue;
        }
        open.push(l);
        open.push(r);
        open_val += l.val + r.val;
        open_err += l.err + r.err;
        ++splits;
    }
    double result = done_val;
    while (!open.empty()) {
        result += open.top().val;
        open.pop();
    }
    return result;
}

double ray_integrate(const std::function<double(double)>& f, double a, double scale,
                     double tol, double s_cap) {
    double theta_max = std::atan((s_cap - a) / scale);
    auto g = [&](double theta) {
        double c = std::cos(theta);
        double s = a + scale * std::tan(theta);
        return f(s) * scale / (c * c);
    };
    return adaptive_integrate(g, 0.0, theta_max, tol);
}

}  // namespace q2mm
