#pragma once

#include <stdexcept>
#include <vector>

#include "q2mm/measures.hpp"
#include "q2mm/spectral_curve.hpp"

namespace q2mm {

struct PrecisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Recurrence coefficients of the orthogonal family q_{k,n} for the weight
// exp(-n(y^4/4 + (t - tau^2) y^2/2)) and the derived five-term coefficients
// of the biorthogonal family p_{k,n}.
struct RecurrenceTable {
    int n = 0;
    double t = 0.0, tau = 1.0;
    std::vector<double> a;  // a[k], k = 0..K, a[0] = 0
    std::vector<double> b;  // b[k] = tau^2 a[k] + k/n, k >= 1
    std::vector<double> c;  // c[k] = tau^2 a[k-2] a[k-1] a[k], k >= 3
};

RecurrenceTable compute_recurrence(const ModelParams& p, int n, int K);

// Value of the monic p_{k,n} at x as (sign, log|value|); the rolling state is
// rescaled each step so large n stay in range.
struct PolyValue {
    int sign = 0;
    double log_abs = 0.0;
};

PolyValue p_eval(const RecurrenceTable& tab, double x, int k);

struct ZeroSet {
    int k = 0;
    int n = 0;
    std::vector<double> zeros;  // ascending
    double bound = 0.0;         // all zeros inside [-bound, bound]
};

// Zeros of p_{k,n} by sign-change scan plus bisection.
ZeroSet p_zeros(const ModelParams& p, int n, int k);

// Zeros as eigenvalues of the k x k five-diagonal recurrence matrix.
std::vector<double> p_zeros_eigen(const RecurrenceTable& tab, int k);

enum class InterlaceMode { consecutive, skip_even };

struct InterlacingResult {
    bool ok = false;
    double margin = 0.0;  // smallest separation in the merged sequence
};

InterlacingResult interlacing_check(const ZeroSet& z1, const ZeroSet& z2, InterlaceMode mode);

struct KSResult {
    double ks = 0.0;
    std::vector<double> bin_edges;
    std::vector<double> freq;  // normalized counts per bin
};

// Kolmogorov-Smirnov distance between the zeros of p_{n,n} and nu_1.
KSResult empirical_vs_nu1(const ModelParams& p, int n);

}  // namespace q2mm
