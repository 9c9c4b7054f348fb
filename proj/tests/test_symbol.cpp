#include "q2mm/symbol.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "q2mm/spectral_curve.hpp"

using namespace q2mm;

namespace {
const ModelParams t0tau1{0.0, 1.0};
}

TEST_CASE("doubled symbol at (0,1,0.16): factored roots at z=0") {
    LaurentSymbol s = symbol_doubled(t0tau1, 0.16);
    RootQuadruple rq = solve_symbol(s, 0.0);
    CHECK(rq.w[0].real() == doctest::Approx(-0.8).epsilon(1e-9));
    CHECK(rq.w[1].real() == doctest::Approx(-0.2).epsilon(1e-9));
    CHECK(std::abs(rq.w[2] - complex(-0.16, 0.0)) < 2e-7);  // double root
    CHECK(std::abs(rq.w[3] - complex(-0.16, 0.0)) < 2e-7);
    for (const auto& w : rq.w) CHECK(std::abs(s(w)) < 1e-10);
}

TEST_CASE("pure d3 symbol: fourth roots of -1") {
    LaurentSymbol s{0.0, 0.0, 0.0, 1.0};
    RootQuadruple rq = solve_symbol(s, 0.0);
    for (const auto& w : rq.w) {
        CHECK(std::abs(w) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(w * w * w * w + 1.0) < 1e-12);
    }
}

TEST_CASE("one-cut symbol at (0,1,1): double root u at z = alpha") {
    BranchData bd = branch_points(t0tau1, 1.0);
    CHECK(bd.alpha == doctest::Approx(2.81156).epsilon(1e-5));
    CHECK(bd.u == doctest::Approx(1.53165).epsilon(1e-5));
    LaurentSymbol s = symbol_onecut(t0tau1, 1.0);
    RootQuadruple rq = solve_symbol(s, bd.alpha);
    CHECK(std::abs(rq.w[0] - complex(bd.u, 0.0)) < 1e-5);
    CHECK(std::abs(rq.w[1] - complex(bd.u, 0.0)) < 1e-5);
}

TEST_CASE("degenerate symbol rejected") {
    LaurentSymbol s{0.0, 1.0, 0.0, 0.0};
    CHECK_THROWS_AS(solve_symbol(s, 1.0), std::invalid_argument);
}

TEST_CASE("root_derivative basics") {
    LaurentSymbol s{0.0, 0.0, 0.0, 1.0};
    CHECK(root_derivative(s, complex(1.0, 0.0)).real() == doctest::Approx(-0.5));

    // branch point of s1 at w = u
    BranchData bd = branch_points(t0tau1, 1.0);
    LaurentSymbol s1 = symbol_onecut(t0tau1, 1.0);
    CHECK_THROWS_AS(root_derivative(s1, complex(bd.u, 0.0)), BranchPointError);
}

TEST_CASE("root derivative matches finite-difference tracking") {
    LaurentSymbol s = symbol_onecut(t0tau1, 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        complex z(4.0 + unif(rng), 1.0 + unif(rng));  // away from cuts
        RootQuadruple rq = solve_symbol(s, z);
        double h = 1e-6;
        for (int j = 0; j < 4; ++j) {
            complex wp = solve_symbol(s, z + h).w[j];
            complex wm = solve_symbol(s, z - h).w[j];
            complex fd = (wp - wm) / (2.0 * h);
            complex an = root_derivative(s, rq.w[j]);
            CHECK(std::abs(fd - an) <= 1e-4 * (1.0 + std::abs(an)));
        }
    }
}

TEST_CASE("side limits on a real cut are conjugate") {
    LaurentSymbol s = symbol_onecut(t0tau1, 1.0);
    SideLimit up = side_limit_root(s, complex(0.5, 0.0), 1, CutAxis::real, CutSide::plus);
    SideLimit dn = side_limit_root(s, complex(0.5, 0.0), 1, CutAxis::real, CutSide::minus);
    CHECK(std::abs(up.w - std::conj(dn.w)) < 1e-8);
    CHECK(std::abs(up.wprime - std::conj(dn.wprime)) < 1e-7);

    // Im(w'/w) < 0 on the plus side makes the density positive
    CHECK((up.wprime / up.w).imag() < 0.0);
}

TEST_CASE("side limits coincide in a spectral gap") {
    LaurentSymbol s = symbol_onecut(t0tau1, 1.0);
    BranchData bd = branch_points(t0tau1, 1.0);
    double x = bd.alpha + 0.5;  // outside Gamma_1
    SideLimit up = side_limit_root(s, complex(x, 0.0), 1, CutAxis::real, CutSide::plus);
    SideLimit dn = side_limit_root(s, complex(x, 0.0), 1, CutAxis::real, CutSide::minus);
    CHECK(std::abs(up.w - dn.w) < 1e-8);
}

TEST_CASE("side limit argument validation") {
    LaurentSymbol s = symbol_onecut(t0tau1, 1.0);
    CHECK_THROWS_AS(side_limit_root(s, complex(0.5, 0.0), 0, CutAxis::real, CutSide::plus),
                    std::invalid_argument);
    CHECK_THROWS_AS(side_limit_root(s, complex(0.5, 0.0), 5, CutAxis::real, CutSide::plus),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        side_limit_root(s, complex(0.5, 0.0), 1, CutAxis::real, CutSide::plus, -1e-5),
        std::invalid_argument);
}

TEST_CASE("Vieta identities on random symbols") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int rep = 0; rep < 1000; ++rep) {
        LaurentSymbol s{unif(rng), unif(rng), unif(rng), 0.0};
        do {
            s.d3 = unif(rng);
        } while (std::abs(s.d3) < 1e-3);
        complex z(unif(rng), unif(rng));
        RootQuadruple rq = solve_symbol(s, z);
        complex sum = rq.w[0] + rq.w[1] + rq.w[2] + rq.w[3];
        complex prod = rq.w[0] * rq.w[1] * rq.w[2] * rq.w[3];
        double scale = 1.0 + std::abs(z) + std::abs(s.d0);
        CHECK(std::abs(sum - (z - s.d0)) <= 1e-9 * scale);
        CHECK(std::abs(prod - complex(s.d3)) <= 1e-9 * (1.0 + std::abs(s.d3)));
        for (const auto& w : rq.w)
            CHECK(std::abs(s(w) - z) <= 1e-10 * (1.0 + std::abs(z)));
    }
}

TEST_CASE("roots track continuously under small z perturbations") {
    LaurentSymbol s = symbol_onecut(t0tau1, 1.5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        complex z(3.0 * unif(rng), 2.0 + std::abs(unif(rng)));
        complex dz(1e-6 * unif(rng), 1e-6 * unif(rng));
        RootQuadruple r0 = solve_symbol(s, z);
        RootQuadruple r1 = solve_symbol(s, z + dz);
        // match by continuity: each perturbed root has a close partner
        for (const auto& w1 : r1.w) {
            double best = 1e100;
            for (const auto& w0 : r0.w) best = std::min(best, std::abs(w1 - w0));
            CHECK(best <= 1e-4);  // O(|dz| / s'(w)), loose bound
        }
    }
}

TEST_CASE("solve_symbol commutes with conjugation") {
    LaurentSymbol s = symbol_onecut(t0tau1, 1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        complex z(unif(rng), unif(rng));
        RootQuadruple a = solve_symbol(s, z);
        RootQuadruple b = solve_symbol(s, std::conj(z));
        // the root multisets are conjugates of each other
        for (const auto& wb : b.w) {
            double best = 1e100;
            for (const auto& wa : a.w) best = std::min(best, std::abs(wb - std::conj(wa)));
            CHECK(best < 1e-12);
        }
    }
}
