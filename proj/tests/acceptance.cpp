// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mesofluct/mesofluct.hpp"

using namespace mesofluct;
using namespace std::complex_literals;
namespace ex = mesofluct::experiments;

namespace {

struct Outcome {
    bool passed;
    std::string detail;
};

std::string g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string failed_checks(const ex::RunResult& r) {
    std::string s;
    for (const auto& c : r.checks)
        s += std::string(c.passed ? "ok" : "FAILED") + " '" + c.name + "' [" + c.detail + "]; ";
    return s;
}

Outcome free_resolvent_oracle() {
    const auto T = truncate(free_jacobi(), 1, 2000);
    double worst = 0.0;
    for (double gamma : {0.3, 0.5})
        for (SiteIndex n : {500, 1000}) {
            const cplx z = SpectralShift(0.0, 1i, gamma, n).z();
            const auto R = numeric_resolvent(T, z);
            const double decay = -1.0 / std::log(std::abs(phi(z)));
            const auto hi = static_cast<SiteIndex>(2000.0 - 20.0 * decay);
            for (SiteIndex k = 1; k <= hi; ++k)
                for (SiteIndex j = 1; j <= hi; ++j)
                    worst = std::max(worst, std::abs(R(j, k) - free_resolvent_entry(j, k, z)));
        }
    return {worst < 1e-10, "max interior error " + g(worst)};
}

Outcome phi_contract() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    double worst = 0.0;
    bool inside = true;
    int drawn = 0;
    while (drawn < 1000) {
        const cplx zeta(u(rng), u(rng));
        if (std::abs(zeta.imag()) < 1e-12 && std::abs(zeta.real()) <= 2.0) continue;
        ++drawn;
        const cplx w = phi(zeta);
        worst = std::max(worst, std::abs(w * w - zeta * w + 1.0));
        inside = inside && std::abs(w) < 1.0;
    }
    // 1 - |phi(z_n)| against |Im eta| / (n^gamma sqrt(4 - x0^2)) at n = 10^4, plus its slope.
    double rel = 0.0, slope_err = 0.0;
    for (double x0 : {0.0, 0.8})
        for (cplx eta : {cplx(1i), cplx(-0.5i)}) {
            std::vector<std::pair<double, double>> pts;
            for (SiteIndex n = 1250; n <= 80'000; n *= 2)
                pts.emplace_back(static_cast<double>(n), 1.0 - std::abs(phi(SpectralShift(x0, eta, 0.3, n).z())));
            slope_err = std::max(slope_err, std::abs(scaling_fit(pts).exponent + 0.3) / 0.3);
            const SpectralShift s(x0, eta, 0.3, 10'000);
            const double predicted = std::abs(eta.imag()) / (s.scale() * std::sqrt(4.0 - x0 * x0));
            rel = std::max(rel, std::abs((1.0 - std::abs(phi(s.z()))) / predicted - 1.0));
        }
    return {worst < 1e-12 && inside && rel < 0.02 && slope_err < 0.02,
            "quadratic residual " + g(worst) + ", |phi| < 1: " + (inside ? "yes" : "no") + ", gap error at 1e4 " +
                g(rel) + ", slope error " + g(slope_err)};
}

Outcome cumulant_oracle() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> size(2, 50);
    int failures = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int N = size(rng);
        const int n = std::uniform_int_distribution<int>(1, N - 1)(rng);
        Eigen::MatrixXd A(N, N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) A(i, j) = gauss(rng);
        const Eigen::MatrixXd F = 0.5 * (A + A.transpose());
        const double nf = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(F).eigenvalues().cwiseAbs().maxCoeff();
        const auto fred = fredholm_cumulants(F, n, 4);
        for (int m = 1; m <= 4; ++m) {
            const double a = m == 1 ? trace_mean(F, n) : trace_cumulant(F, n, m);
            const double b = fred[static_cast<std::size_t>(m - 1)];
            const double floor = 1e-12 * N * std::pow(nf, m);
            const double scale = std::max(std::abs(a), std::abs(b));
            if (std::abs(a - b) > 1e-6 * scale + floor) ++failures;
            if (scale > floor) worst = std::max(worst, std::abs(a - b) / scale);
        }
    }
    return {failures == 0, std::to_string(failures) + " disagreements, worst relative gap " + g(worst)};
}

Outcome monte_carlo() {
    ex::ExperimentConfig cfg;
    cfg.experiment = "mc";
    cfg.n_grid = {50};
    cfg.samples = 10'000;
    const auto r = ex::run_mc_crosscheck(cfg);
    const bool ok = r.check("kappa1 vs trace mean within 3 SE").passed && r.check("kappa2 vs 2 C2 within 3 SE").passed;
    const auto& row = r.rows.front();
    return {ok, "kappa1 z = " + g(row[r.column("z_k1_trace")]) + ", kappa2 z = " + g(row[r.column("z_k2")])};
}

Outcome rank_one() {
    const SiteIndex n = 500;
    const auto T = truncate(free_jacobi(), 1, 1200);
    const auto H = decouple(T, n, 2, 0.6);
    const auto mid = H.middle();
    const auto block = truncate(free_jacobi(), mid.lo, mid.hi);
    const cplx z = SpectralShift(0.0, 1i, 0.3, n).z();
    const auto R0 = numeric_resolvent(block, z);
    double worst = 0.0;
    for (SiteIndex r : {n, mid.lo + 3, mid.hi - 3, n + 37}) {
        const auto R = numeric_resolvent(block.with_diagonal_shift(r, 0.3), z);
        const auto D = rank_one_resolvent_diff(R0, r, 0.3);
        worst = std::max(worst, (R0.values - R.values - D.values).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-10, "max residual " + g(worst)};
}

Outcome decoupling() {
    ex::ExperimentConfig cfg;
    cfg.experiment = "decoupling";
    cfg.n_grid = {500, 1000, 2000};
    const auto r = ex::run_decoupling_check(cfg);
    const auto& c = r.check("norm_J0 drops >= 10x per doubling");
    return {c.passed, "norms " + g(r.rows[0][r.column("norm_J0")]) + ", " + g(r.rows[1][r.column("norm_J0")]) + ", " +
                          g(r.rows[2][r.column("norm_J0")]) + " (" + c.detail + ")"};
}

Outcome hankel() {
    const auto J = ex::perturbed_operator(ex::ExperimentConfig{});
    bool slopes = true, dominates = true;
    double assembly = 0.0;
    std::string detail;
    for (double gamma : {0.2, 0.5, 0.8}) {
        std::vector<SiteIndex> ns;
        for (int k = 7; k <= 13; ++k) ns.push_back(SiteIndex{1} << k);
        const auto fit = scaling_fit(exact_hankel_scaling(0.0, 1i, gamma, ns));
        slopes = slopes && std::abs(fit.exponent - gamma) <= 0.05;
        detail += "slope(" + g(gamma) + ") = " + g(fit.exponent) + ", ";
        for (SiteIndex n : ns) {
            const SpectralShift s(0.0, 1i, gamma, n);
            const auto b = besov_functionals(phi(s.z()), gamma, n, calibrated_bconst);
            dominates = dominates && b.bound >= b.exact;
            const auto& p = *J.perturbation();
            const auto it = std::lower_bound(p.positions().begin(), p.positions().end(), n);
            const auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - p.positions().begin(),
                                                                              static_cast<std::ptrdiff_t>(p.positions().size()) - 1));
            const auto direct = build_comparison_matrices(n, 2, 0.45, s, p.positions()[k], p.values()[k]);
            const auto assembled = assemble_T_from_hankel(n, 2, 0.45, s, p.positions()[k], p.values()[k]);
            assembly = std::max(assembly, (assembled.values - direct.T.values).cwiseAbs().maxCoeff() /
                                              direct.T.values.cwiseAbs().maxCoeff());
        }
    }
    detail += std::string("bound dominates: ") + (dominates ? "yes" : "no") + ", assembly error " + g(assembly);
    return {slopes && dominates && assembly <= 1e-12, detail};
}

ex::ExperimentConfig sweep_config(const std::string& id) {
    ex::ExperimentConfig cfg;
    cfg.experiment = id;
    cfg.n_grid = {500, 1000, 2000, 4000};
    cfg.gamma = 0.3;
    cfg.beta = 0.6;
    cfg.eps = 0.05;
    cfg.lambda_rule = "inv_log";
    cfg.test_function = "imag_rational(1,0,1)";
    cfg.m_list = {2, 3};
    return cfg;
}

Outcome stability(const ex::RunOptions& opt) {
    const auto r = ex::run_stability_sweep(sweep_config("stability"), opt);
    bool ok = true;
    std::string detail;
    for (int m : {2, 3}) {
        const std::string tag = "diff(" + std::to_string(m) + ")";
        const auto& a = r.check(tag + " decreasing in n");
        const auto& b = r.check(tag + " at the largest n below 30% of the smallest");
        ok = ok && a.passed && b.passed;
        detail += tag + " = [" + a.detail + "] decreasing: " + (a.passed ? "yes" : "no") + ", " + b.detail + "; ";
    }
    return {ok, detail};
}

Outcome clt(const ex::RunOptions& opt) {
    const auto r = ex::run_clt_check(sweep_config("clt"), opt);
    const bool ok = r.check("variance gap decreasing in n").passed &&
                    r.check("relative variance gap at the largest n below 15%").passed &&
                    r.check("|C3| at the largest n below half the smallest").passed &&
                    r.check("|C4| at the largest n below half the smallest").passed;
    return {ok, failed_checks(r)};
}

Outcome sine_kernel() {
    const double t = 1.0 / std::sqrt(4.0);
    const double target = std::sin(t) / t;
    const double ratio = sine_ratio(0.0, 0.0, 1.0, 2000, free_jacobi());
    const double rel = std::abs(ratio / target - 1.0);
    return {rel < 0.05, "ratio " + g(ratio) + " vs " + g(target) + " (relative " + g(rel) + ")"};
}

}  // namespace

int main() {
    ex::RunOptions opt;
    opt.log = &std::cerr;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"free resolvent oracle", free_resolvent_oracle},
        {"phi contract", phi_contract},
        {"cumulant oracle equivalence", cumulant_oracle},
        {"Monte Carlo consistency", monte_carlo},
        {"rank-one identity", rank_one},
        {"decoupling decay", decoupling},
        {"Hankel scaling", hankel},
        {"stability", [&] { return stability(opt); }},
        {"CLT variance", [&] { return clt(opt); }},
        {"sine-kernel ratio", sine_kernel},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.passed) ++failures;
        std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first << ", "
                  << g(secs) << " s): " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
