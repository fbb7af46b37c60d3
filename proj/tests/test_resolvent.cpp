#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mesofluct/resolvent.hpp"

using namespace mesofluct;
using namespace std::complex_literals;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

}  // namespace

TEST_CASE("phi") {
    CHECK(std::abs(phi(2.5) - 0.5) < 1e-15);
    CHECK(std::abs(phi(-2.5) + 0.5) < 1e-15);
    const cplx z = 0.3 + 0.2i;
    CHECK(std::abs(phi(z) + 1.0 / phi(z) - z) < 1e-12 * std::abs(z));

    SECTION("quadratic identity on random arguments") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-5.0, 5.0), e(-12.0, 1.0);
        for (int i = 0; i < 1000; ++i) {
            // Mix of generic points and points just above/below the cut.
            const double im = (i % 3 == 0) ? std::copysign(std::pow(10.0, e(rng)), u(rng)) : u(rng);
            const cplx zeta(u(rng), im);
            if (std::abs(zeta.imag()) < 1e-12 && std::abs(zeta.real()) <= 2.0) continue;
            const cplx w = phi(zeta);
            CHECK(std::abs(w * w - zeta * w + 1.0) < 1e-12 * std::max(1.0, std::abs(zeta)));
            CHECK(std::abs(w) < 1.0);
        }
    }
    SECTION("analytic branch near infinity") {
        const cplx big(1e6, 3e5);
        CHECK(std::abs(phi(big) * big - 1.0) < 1e-10);
    }
    SECTION("conjugation symmetry") {
        const cplx zeta(0.7, 1e-3);
        CHECK(std::abs(phi(std::conj(zeta)) - std::conj(phi(zeta))) < 1e-15);
    }
    SECTION("rejects the cut") {
        CHECK_THROWS_AS(phi(1.0), InvalidArgument);
        CHECK_THROWS_AS(phi(cplx(2.0, 1e-13)), InvalidArgument);
        CHECK_NOTHROW(phi(cplx(2.0, 1e-11)));
    }
    SECTION("boundary asymptotics") {
        for (double x0 : {0.0, 0.8})
            for (cplx eta : {1i, -0.5i}) {
                std::vector<double> ns, gaps;
                for (double n = 100; n <= 1e5; n *= 2) {
                    const SpectralShift s(x0, eta, 0.4, static_cast<SiteIndex>(n));
                    ns.push_back(n);
                    gaps.push_back(1.0 - std::abs(phi(s.z())));
                }
                CHECK(std::abs(loglog_slope(ns, gaps) + 0.4) < 0.02 * 0.4);
                const SpectralShift s(x0, eta, 0.4, 10'000);
                const double predicted = std::abs(eta.imag()) / (s.scale() * std::sqrt(4 - x0 * x0));
                CHECK(std::abs((1.0 - std::abs(phi(s.z()))) / predicted - 1.0) < 0.02);
            }
    }
}

TEST_CASE("free_resolvent_entry") {
    CHECK(std::abs(free_resolvent_entry(1, 1, 3.0) + 0.3819660112501051) < 1e-12);
    CHECK(std::abs(free_resolvent_entry(1, 1, 2.5) + 0.5) < 1e-15);
    const cplx z = 0.1 + 0.05i;
    for (SiteIndex j : {1, 7, 40})
        for (SiteIndex k : {1, 3, 55}) CHECK(free_resolvent_entry(j, k, z) == free_resolvent_entry(k, j, z));
    CHECK_THROWS_AS(free_resolvent_entry(0, 1, z), InvalidArgument);
    CHECK_THROWS_AS(free_resolvent_entry(1, 1, 0.5), InvalidArgument);

    // Inversion of a size-2000 truncation reproduces the closed form at (1,1).
    const auto R = numeric_resolvent(truncate(free_jacobi(), 1, 2000), 3.0);
    CHECK(std::abs(R(1, 1) - free_resolvent_entry(1, 1, 3.0)) < 1e-12);
}

TEST_CASE("numeric_resolvent") {
    SECTION("scalar case") {
        const TruncatedJacobi T(4, {0.7}, {});
        const cplx z = 0.2 + 1i;
        const auto R = numeric_resolvent(T, z);
        CHECK(std::abs(R(4, 4) - 1.0 / (0.7 - z)) < 1e-15);
    }
    SECTION("free oracle on an interior window") {
        const auto T = truncate(free_jacobi(), 1, 2000);
        const auto R = numeric_resolvent(T, 3.0);
        CHECK(std::abs(R(500, 500) - free_resolvent_entry(500, 500, 3.0)) < 1e-10);
    }
    SECTION("conjugate symmetry and complex symmetry") {
        const auto J = make_preset("sparse(0.6,0.05,inv_log)", {.index_limit = 400});
        const auto T = truncate(J, 1, 400);
        const cplx z = 0.1 + 0.05i;
        const auto R = numeric_resolvent(T, z);
        const auto Rc = numeric_resolvent(T, std::conj(z));
        CHECK(max_abs(Rc.values - R.values.conjugate()) < 1e-12);
        CHECK(max_abs(R.values - R.values.transpose()) < 1e-12);
    }
    SECTION("interior agreement for mesoscopic shifts") {
        for (double gamma : {0.3, 0.5})
            for (SiteIndex n : {500, 1000}) {
                const SpectralShift s(0.0, 1i, gamma, n);
                const auto T = truncate(free_jacobi(), 1, 2000);
                const auto R = numeric_resolvent(T, s.z());
                const double decay = -1.0 / std::log(std::abs(phi(s.z())));
                const auto hi = static_cast<SiteIndex>(2000 - 20 * decay);
                double err = 0.0;
                for (SiteIndex j = 1; j <= hi; j += 7)
                    for (SiteIndex k = 1; k <= hi; k += 5)
                        err = std::max(err, std::abs(R(j, k) - free_resolvent_entry(j, k, s.z())));
                CHECK(err < 1e-10);
            }
    }
    SECTION("rejects a real shift on the spectrum") {
        const TruncatedJacobi T(1, {0.0, 0.0}, {1.0});
        CHECK_THROWS_AS(numeric_resolvent(T, 1.0), NumericalError);
    }
}

TEST_CASE("combes_thomas_fit") {
    const auto T = truncate(free_jacobi(), 1, 3000);
    auto fit_at = [&](SiteIndex n, double gamma) {
        const SpectralShift s(0.0, 1i, gamma, n);
        const auto R = TridiagonalResolvent(T, s.z()).full();
        return combes_thomas_fit(R.restrict(ProjectionWindow(1000, 1600)).values, n, gamma);
    };
    const auto f = fit_at(1000, 0.5);
    const double expected = 1.0 / 2.0;  // |Im eta| / sqrt(4 - x0^2)
    const double scaled = f.d_hat * std::pow(1000.0, 0.5);
    CHECK(scaled >= 0.5 * expected);
    CHECK(scaled <= 2.0 * expected);
    CHECK(f.r2 > 0.95);

    // d_hat ~ n^{-gamma}: doubling n divides it by 2^gamma.
    for (double gamma : {0.5, 0.9}) {
        const double ratio = fit_at(400, gamma).d_hat / fit_at(800, gamma).d_hat;
        CHECK(std::abs(ratio / std::pow(2.0, gamma) - 1.0) < 0.2);
    }

    const Eigen::MatrixXcd D = Eigen::MatrixXcd::Identity(100, 100);
    CHECK_THROWS_AS(combes_thomas_fit(D, 100, 0.5), NumericalError);
}

TEST_CASE("decouple") {
    const auto J = make_preset("sparse(0.6,0.05,inv_log)", {.index_limit = 5000});
    const auto T = truncate(J, 1, 1200);
    const auto H = decouple(T, 500, 2, 0.6);
    const double half = 4.0 * std::pow(500.0, 0.6);
    CHECK(H.cut_lo == static_cast<SiteIndex>(std::floor(500 - half)));
    CHECK(H.cut_hi == static_cast<SiteIndex>(std::floor(500 + half)));
    for (SiteIndex i = 1; i < 1200; ++i) {
        const bool cut = i == H.cut_lo || i == H.cut_hi;
        CHECK(H.op.entry(i, i + 1) == (cut ? 0.0 : T.entry(i, i + 1)));
        CHECK(H.op.entry(i + 1, i) == H.op.entry(i, i + 1));
        CHECK(H.op.entry(i, i) == T.entry(i, i));
    }

    SECTION("resolvent is block diagonal") {
        const auto R = numeric_resolvent(H.op, 0.1 + 0.1i);
        double across = 0.0;
        for (SiteIndex j = 1; j <= 1200; j += 3)
            for (SiteIndex k = 1; k <= 1200; k += 3) {
                const int bj = j <= H.cut_lo ? 0 : (j <= H.cut_hi ? 1 : 2);
                const int bk = k <= H.cut_lo ? 0 : (k <= H.cut_hi ? 1 : 2);
                if (bj != bk) across = std::max(across, std::abs(R(j, k)));
            }
        CHECK(across == 0.0);
    }
    SECTION("no site in the window: J and J0 decouple identically") {
        const auto T0 = truncate(free_jacobi(), 1, 300);
        const auto Jq = free_jacobi().with_perturbation(
            SparsePerturbation({5000}, {0.3}, 0.6, "test", 1, std::nullopt));
        const auto Tq = truncate(Jq, 1, 300);
        const auto a = decouple(T0, 150, 1, 0.6), b = decouple(Tq, 150, 1, 0.6);
        CHECK(a.op.dense() == b.op.dense());
    }
    SECTION("identity route matches subtraction") {
        const cplx z = SpectralShift(0.0, 1i, 0.3, 500).z();
        const auto w = comparison_window(500, 2, 0.45);
        const Eigen::MatrixXcd diff = decoupling_difference(T, H, z, w);
        const auto RT = numeric_resolvent(T, z).restrict(w);
        const auto RH = numeric_resolvent(H.op, z).restrict(w);
        CHECK(max_abs(diff - (RT.values - RH.values)) < 1e-13);
    }
    SECTION("rejects cuts outside the window") {
        CHECK_THROWS_AS(decouple(truncate(free_jacobi(), 1, 600), 500, 2, 0.6), InvalidArgument);
    }
}

TEST_CASE("decoupling decays and respects the lemma bound") {
    const double gamma = 0.3, beta = 0.6, beta_prime = 0.45;
    const int m = 2;
    std::vector<double> norms;
    for (SiteIndex n : {500, 1000, 2000}) {
        const SpectralShift s(0.0, 1i, gamma, n);
        const auto hi = n + static_cast<SiteIndex>(2 * m * std::pow(n, beta)) + 400;
        const auto T = truncate(free_jacobi(), 1, hi);
        const auto H = decouple(T, n, m, beta);
        const auto w = comparison_window(n, m, beta_prime);
        const double norm = trace_norm(decoupling_difference(T, H, s.z(), w));
        norms.push_back(norm);

        const auto R = TridiagonalResolvent(T, s.z()).full();
        const auto mid = comparison_window(n, m, beta);
        const auto fit = combes_thomas_fit(R.restrict(mid).values, n, gamma);
        const double bound = decoupling_lemma_bound(n, m, beta, beta_prime, gamma, fit.C_hat,
                                                    fit.d_hat * s.scale());
        CHECK(norm <= bound);
    }
    CHECK(norms[1] * 10 <= norms[0]);
    CHECK(norms[2] * 10 <= norms[1]);
}

TEST_CASE("rank_one_resolvent_diff") {
    const auto Hblock = truncate(free_jacobi(), 300, 700);
    const cplx z = SpectralShift(0.0, 1i, 0.3, 500).z();
    const auto R0 = numeric_resolvent(Hblock, z);
    const SiteIndex r = 520;

    const auto zero = rank_one_resolvent_diff(R0, r, 0.0);
    CHECK(max_abs(zero.values) == 0.0);

    const auto D = rank_one_resolvent_diff(R0, r, 0.3);
    const auto R = numeric_resolvent(Hblock.with_diagonal_shift(r, 0.3), z);
    CHECK(max_abs(D.values - (R0.values - R.values)) < 1e-10);

    const auto sv = singular_values(D.values);
    CHECK(sv(1) < 1e-10 * sv(0));

    // 1 + lambda R0_rr = 0 is a resonance.
    WindowedMatrix fake = R0;
    fake.values(r - 300, r - 300) = 2.0;
    CHECK_THROWS_AS(rank_one_resolvent_diff(fake, r, -0.5), NumericalError);
}

TEST_CASE("comparison matrices") {
    SECTION("G = lambda T + R and rank-one T") {
        const SpectralShift s(0.0, 1i, 0.3, 1000);
        const auto c = build_comparison_matrices(1000, 2, 0.45, s, 1010, 0.4);
        CHECK(max_abs(c.G.values - 0.4 * c.T.values - c.R.values) < 1e-12);
        const auto sv = singular_values(c.T.values);
        CHECK(sv(1) < 1e-10 * sv(0));
        CHECK(c.T(1010, 1010) == c.amplitude);
    }
    SECTION("G matches the rank-one update of the free truncation") {
        const SpectralShift s(0.3, 1i, 0.5, 400);
        const SiteIndex r = 410;
        const auto c = build_comparison_matrices(400, 2, 0.45, s, r, 0.3);
        const auto T = truncate(free_jacobi(), 1, 1600);
        const auto R0 = numeric_resolvent(T, s.z());
        const auto D = rank_one_resolvent_diff(R0, r, 0.3).restrict(comparison_window(400, 2, 0.45));
        CHECK(max_abs(c.G.values - D.values) < 1e-10);
    }
    SECTION("amplitude limit") {
        // The limit needs lambda_k -> 0: use the site nearest n = 10^4 of the
        // inv_log preset and its own lambda.
        const auto J = make_preset("sparse(0.6,0.05,inv_log)", {.index_limit = 20'000});
        const auto& p = *J.perturbation();
        const auto it = std::lower_bound(p.positions().begin(), p.positions().end(), 10'000);
        const auto k = static_cast<std::size_t>(it - p.positions().begin());
        const SpectralShift s(0.0, 1i, 0.3, 10'000);
        const auto c = build_comparison_matrices(10'000, 2, 0.45, s, p.positions()[k], p.values()[k]);
        CHECK(std::abs(std::abs(c.amplitude) * 4.0 - 1.0) < 0.02);
        // A fixed lambda keeps the factor 1 / (1 + lambda / (phi - 1/phi)) in the limit.
        const auto fixed = build_comparison_matrices(10'000, 2, 0.45, s, 10'000, 0.5);
        CHECK(std::abs(std::abs(fixed.amplitude) * 4.0 * std::abs(1.0 + 0.5 / (2.0 * 1i)) - 1.0) < 0.02);
    }
    SECTION("remainder vanishes") {
        std::vector<double> norms;
        for (int j = 8; j <= 13; ++j) {
            const SiteIndex n = SiteIndex{1} << j;
            const SpectralShift s(0.0, 1i, 0.3, n);
            norms.push_back(trace_norm(build_comparison_matrices(n, 2, 0.45, s, n, 0.5).R.values));
        }
        for (std::size_t i = 1; i < norms.size(); ++i) CHECK(norms[i] < norms[i - 1]);
        CHECK(norms.back() < 1e-10);
    }
    SECTION("lambda = 0") {
        const SpectralShift s(0.0, 1i, 0.3, 500);
        const auto c = build_comparison_matrices(500, 2, 0.45, s, 500, 0.0);
        CHECK(max_abs(c.G.values) == 0.0);
        CHECK(max_abs(c.R.values) == 0.0);
        CHECK(max_abs(0.0 * c.T.values) == 0.0);
    }
}

TEST_CASE("assemble_T_from_hankel") {
    const SpectralShift s(0.0, 1i, 0.4, 200);
    const auto w = comparison_window(200, 2, 0.5);
    for (SiteIndex r : {w.lo, SiteIndex{200}, w.hi - 3, w.lo + 5, w.hi + 7, w.lo - 4}) {
        const auto direct = build_comparison_matrices(200, 2, 0.5, s, r, 0.35);
        const auto assembled = assemble_T_from_hankel(200, 2, 0.5, s, r, 0.35);
        CHECK(assembled.row_origin == direct.T.row_origin);
        CHECK(max_abs(assembled.values - direct.T.values) <= 1e-12 * max_abs(direct.T.values));
    }
    const SiteIndex center = (w.lo + w.hi) / 2;
    const auto Tc = assemble_T_from_hankel(200, 2, 0.5, s, center, 0.35);
    const auto Tr = Tc.values.reverse().eval();
    if ((w.hi - center) == (center - w.lo)) CHECK(max_abs(Tc.values - Tr) < 1e-15);
    CHECK(Tc(center, center) == comparison_amplitude(s.z(), center, 0.35));
}
