#pragma once

// The six batch experiments. Each returns a RunResult whose rows depend only on
// the config (and its seed), plus named checks over those rows.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "mesofluct/cumulants.hpp"
#include "mesofluct/error.hpp"
#include "mesofluct/experiments/config.hpp"
#include "mesofluct/experiments/result.hpp"
#include "mesofluct/hankel.hpp"
#include "mesofluct/jacobi.hpp"
#include "mesofluct/linalg.hpp"
#include "mesofluct/ope_sampler.hpp"
#include "mesofluct/resolvent.hpp"
#include "mesofluct/test_function.hpp"

namespace mesofluct::experiments {

struct RunOptions {
    std::ostream* log = nullptr;  // progress lines, if set
};

/// Size of the free truncation used by the resolvent validation.
inline constexpr SiteIndex resolvent_truncation = 2000;

namespace detail {

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

inline void note(const RunOptions& opt, const std::string& msg) {
    if (opt.log) *opt.log << msg << std::endl;
}

inline RunResult start(const ExperimentConfig& cfg, std::vector<std::string> columns) {
    RunResult r;
    r.experiment = cfg.experiment;
    r.columns = std::move(columns);
    r.provenance = make_provenance(cfg);
    return r;
}

inline ExperimentConfig prepare(const ExperimentConfig& in, const std::string& id) {
    auto cfg = resolved(in);
    if (cfg.experiment != id) throw ConfigError("config is for '" + cfg.experiment + "', not '" + id + "'");
    validate_with_operator(cfg);
    return cfg;
}

inline std::string operator_id(const ExperimentConfig& cfg) {
    if (cfg.lambda_rule == "kls_singular") return "kls_singular";
    return "sparse(" + fmt17(cfg.beta) + "," + fmt17(cfg.eps) + "," + cfg.lambda_rule + ")";
}

/// Perturbation site nearest to n (ties go to the smaller site), if any.
inline std::optional<std::pair<SiteIndex, double>> nearest_site(const JacobiOperator& J, SiteIndex n,
                                                                std::optional<ProjectionWindow> within = {}) {
    if (!J.perturbation()) return std::nullopt;
    const auto& p = *J.perturbation();
    std::optional<std::pair<SiteIndex, double>> best;
    for (std::size_t k = 0; k < p.positions().size(); ++k) {
        const SiteIndex s = p.positions()[k];
        if (within && !within->contains(s)) continue;
        if (!best || std::abs(s - n) < std::abs(best->first - n)) best = std::make_pair(s, p.values()[k]);
    }
    return best;
}

/// Geometric decay per doubling of n between consecutive rows: (v_i / v_{i+1})^{1 / log2(n_{i+1}/n_i)}.
inline double per_doubling_drop(double v0, double v1, SiteIndex n0, SiteIndex n1) {
    return std::pow(v0 / v1, 1.0 / std::log2(static_cast<double>(n1) / static_cast<double>(n0)));
}

/// Non-increasing, strictly unless both values are zero.
inline bool decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1] || (v[i] == 0.0 && v[i - 1] == 0.0))) return false;
    return true;
}

inline bool shrinks_to(const std::vector<double>& v, double fraction) {
    return v.back() < fraction * v.front() || (v.back() == 0.0 && v.front() == 0.0);
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt17(v[i]);
    return s;
}

/// Process-wide memo of operator cumulants, shared by the stability and CLT runs.
class CumulantCache {
public:
    static CumulantCache& instance() {
        static CumulantCache c;
        return c;
    }

    OperatorCumulants get(const std::string& op_id, const JacobiOperator& J, const TestFunction& f,
                          const MesoscopicConfig& mc, int max_order, const RunOptions& opt) {
        const std::string key = op_id + "|" + f.name() + "|" + fmt17(mc.gamma) + "|" + fmt17(mc.x0) + "|" +
                                std::to_string(mc.n) + "|" + std::to_string(mc.truncation_size) + "|" +
                                std::to_string(max_order);
        {
            std::lock_guard lock(mutex_);
            if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        }
        note(opt, "  cumulants " + op_id + " at n = " + std::to_string(mc.n));
        std::vector<int> orders;
        for (int k = 2; k <= max_order; ++k) orders.push_back(k);
        auto value = operator_cumulants(J, f, mc, orders);
        std::lock_guard lock(mutex_);
        return memo_.emplace(key, std::move(value)).first->second;
    }

    void clear() {
        std::lock_guard lock(mutex_);
        memo_.clear();
    }

private:
    std::mutex mutex_;
    std::map<std::string, OperatorCumulants> memo_;
};

}  // namespace detail

/// Closed-form vs numeric free resolvent on interior windows, plus a
/// Combes-Thomas fit of the numeric resolvent per n.
inline RunResult run_resolvent_validation(const ExperimentConfig& in, const RunOptions& opt = {}) {
    const auto cfg = detail::prepare(in, "resolvent");
    auto r = detail::start(cfg, {"n", "z_re", "z_im", "interior_hi", "max_error", "C_hat", "d_hat", "d_scaled",
                                 "d_expected", "r2"});
    const SiteIndex N = resolvent_truncation;
    const auto T = truncate(free_jacobi(), 1, N);
    const ProjectionWindow fit_window(N / 4, N / 2);
    const double d_expected = std::abs(cfg.eta.imag()) / std::sqrt(4.0 - cfg.x0 * cfg.x0);
    for (SiteIndex n : cfg.n_grid) {
        detail::note(opt, "resolvent: n = " + std::to_string(n));
        const SpectralShift s(cfg.x0, cfg.eta, cfg.gamma, n);
        const cplx z = s.z();
        const auto R = numeric_resolvent(T, z);
        const double decay = -1.0 / std::log(std::abs(phi(z)));
        const auto hi = static_cast<SiteIndex>(std::floor(static_cast<double>(N) - 20.0 * decay));
        if (hi < 50)
            throw NumericalError("resolvent: decay length " + detail::fmt17(decay) +
                                 " leaves no interior window in a size-" + std::to_string(N) + " truncation");
        double err = 0.0;
        for (SiteIndex k = 1; k <= hi; ++k)
            for (SiteIndex j = 1; j <= hi; ++j) err = std::max(err, std::abs(R(j, k) - free_resolvent_entry(j, k, z)));
        const auto fit = combes_thomas_fit(R.restrict(fit_window).values, n, cfg.gamma);
        r.add_row({static_cast<double>(n), z.real(), z.imag(), static_cast<double>(hi), err, fit.C_hat, fit.d_hat,
                   fit.d_hat * s.scale(), d_expected, fit.r2});
    }
    const auto err = r.column_values("max_error");
    const auto r2 = r.column_values("r2");
    const auto ds = r.column_values("d_scaled");
    const double spread = *std::max_element(ds.begin(), ds.end()) / *std::min_element(ds.begin(), ds.end());
    r.summary = {{"max_error", *std::max_element(err.begin(), err.end())}, {"d_scaled_spread", spread}};
    r.checks.push_back({"interior error below 1e-10",
                        std::all_of(err.begin(), err.end(), [](double e) { return e < 1e-10; }), detail::join(err)});
    r.checks.push_back({"fit r2 above 0.95", std::all_of(r2.begin(), r2.end(), [](double v) { return v > 0.95; }),
                        detail::join(r2)});
    r.checks.push_back({"d_hat n^gamma stable within 20%", spread <= 1.2, "max/min = " + detail::fmt17(spread)});
    return r;
}

/// Windowed trace norms of R_J - R_H (H decoupled at n -+ 2 m n^beta) for J0 and
/// J, and the rank-one identity on the decoupled middle block.
inline RunResult run_decoupling_check(const ExperimentConfig& in, const RunOptions& opt = {}) {
    const auto cfg = detail::prepare(in, "decoupling");
    auto r = detail::start(cfg, {"n", "cut_lo", "cut_hi", "window_lo", "window_hi", "norm_J0", "norm_J", "site_r",
                                 "lambda_r", "rank_one_residual"});
    const auto J0 = free_jacobi();
    const auto J = perturbed_operator(cfg);
    const int m = cfg.window_m;
    bool zero_perturbation = true;
    for (SiteIndex n : cfg.n_grid) {
        detail::note(opt, "decoupling: n = " + std::to_string(n));
        const cplx z = SpectralShift(cfg.x0, cfg.eta, cfg.gamma, n).z();
        const auto hi = n + static_cast<SiteIndex>(std::ceil(2.0 * m * std::pow(static_cast<double>(n), cfg.beta))) + 400;
        const auto w = comparison_window(n, m, cfg.beta_prime);
        const auto T0 = truncate(J0, 1, hi);
        const auto TJ = truncate(J, 1, hi);
        const auto H0 = decouple(T0, n, m, cfg.beta);
        const auto HJ = decouple(TJ, n, m, cfg.beta);
        const double norm0 = trace_norm(decoupling_difference(T0, H0, z, w));
        const double normJ = trace_norm(decoupling_difference(TJ, HJ, z, w));
        if (J.perturbation())
            for (const auto& [site, lambda] : J.perturbation()->sites_in(1, hi))
                if (lambda != 0.0) zero_perturbation = false;

        double residual = detail::nan, site = detail::nan, lambda = detail::nan;
        const auto mid = H0.middle();
        if (const auto s = detail::nearest_site(J, n, mid)) {
            const auto block = truncate(J0, mid.lo, mid.hi);
            const auto R0 = numeric_resolvent(block, z);
            const auto R = numeric_resolvent(block.with_diagonal_shift(s->first, s->second), z);
            const auto D = rank_one_resolvent_diff(R0, s->first, s->second);
            residual = (R0.values - R.values - D.values).cwiseAbs().maxCoeff();
            site = static_cast<double>(s->first);
            lambda = s->second;
        }
        r.add_row({static_cast<double>(n), static_cast<double>(H0.cut_lo), static_cast<double>(H0.cut_hi),
                   static_cast<double>(w.lo), static_cast<double>(w.hi), norm0, normJ, site, lambda, residual});
    }
    const auto ns = r.column_values("n");
    for (const std::string col : {"norm_J0", "norm_J"}) {
        const auto v = r.column_values(col);
        bool ok = true;
        std::vector<double> drops;
        for (std::size_t i = 1; i < v.size(); ++i) {
            drops.push_back(detail::per_doubling_drop(v[i - 1], v[i], cfg.n_grid[i - 1], cfg.n_grid[i]));
            ok = ok && drops.back() >= 10.0;
        }
        r.checks.push_back({col + " drops >= 10x per doubling", ok, "drops " + detail::join(drops)});
    }
    const auto res = r.column_values("rank_one_residual");
    std::vector<double> finite;
    for (double v : res)
        if (!std::isnan(v)) finite.push_back(v);
    r.checks.push_back({"rank-one residual below 1e-10",
                        std::all_of(finite.begin(), finite.end(), [](double v) { return v < 1e-10; }),
                        std::to_string(finite.size()) + " of " + std::to_string(res.size()) +
                            " rows have a site in the middle block: " + detail::join(finite)});
    if (zero_perturbation) {
        const auto a = r.column_values("norm_J0"), b = r.column_values("norm_J");
        r.checks.push_back({"zero perturbation reproduces J0", a == b, ""});
    }
    const auto last = r.rows.back();
    r.summary = {{"norm_J0_last", last[r.column("norm_J0")]}, {"norm_J_last", last[r.column("norm_J")]}};
    return r;
}

/// Exact Hankel trace norms, the Besov-type bound, and the four-Hankel assembly
/// of the comparison matrix T at the perturbation site nearest n.
inline RunResult run_hankel_scaling(const ExperimentConfig& in, const RunOptions& opt = {}) {
    const auto cfg = detail::prepare(in, "hankel");
    auto r = detail::start(cfg, {"n", "q_abs", "exact", "bound", "A", "B", "site_r", "lambda_r", "amplitude_abs",
                                 "T_norm", "ratio", "ratio_limit"});
    const auto J = perturbed_operator(cfg);
    for (SiteIndex n : cfg.n_grid) {
        detail::note(opt, "hankel: n = " + std::to_string(n));
        const SpectralShift s(cfg.x0, cfg.eta, cfg.gamma, n);
        const cplx q = phi(s.z());
        const auto b = besov_functionals(q, cfg.gamma, n, calibrated_bconst);
        const auto site = detail::nearest_site(J, n).value_or(std::make_pair(n, 0.0));
        const auto T = assemble_T_from_hankel(n, cfg.window_m, cfg.beta_prime, s, site.first, site.second);
        const cplx A = comparison_amplitude(s.z(), site.first, site.second);
        const double tn = trace_norm(T.values);
        r.add_row({static_cast<double>(n), std::abs(q), b.exact, b.bound, b.A_val, b.B_val,
                   static_cast<double>(site.first), site.second, std::abs(A), tn, tn / b.exact, 4.0 * std::abs(A)});
    }
    auto fit = [&](const std::string& col) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : r.rows) pts.emplace_back(row[0], row[r.column(col)]);
        return scaling_fit(pts);
    };
    const auto fe = fit("exact"), fb = fit("bound"), fa = fit("A"), fB = fit("B"), ft = fit("T_norm");
    const auto ratio = r.column_values("ratio");
    r.summary = {{"exponent_exact", fe.exponent}, {"r2_exact", fe.r2},  {"exponent_bound", fb.exponent},
                 {"exponent_A", fa.exponent},     {"exponent_B", fB.exponent},
                 {"exponent_T", ft.exponent},     {"C_estimate", *std::max_element(ratio.begin(), ratio.end())}};
    r.checks.push_back({"exact exponent within gamma +- 0.05", std::abs(fe.exponent - cfg.gamma) <= 0.05,
                        "exponent " + detail::fmt17(fe.exponent)});
    bool dominates = true, bounded = true;
    for (const auto& row : r.rows) {
        dominates = dominates && row[r.column("bound")] >= row[r.column("exact")];
        bounded = bounded && row[r.column("ratio")] <= row[r.column("ratio_limit")] * (1.0 + 1e-12);
    }
    r.checks.push_back({"bound dominates exact", dominates, "Bconst = " + detail::fmt17(calibrated_bconst)});
    r.checks.push_back({"T norm within 4|A| of the Hankel norm", bounded, "ratios " + detail::join(ratio)});
    return r;
}

/// Largest allowed growth of the per-n bound-chain ratio over its value at the
/// smallest n.
inline constexpr double chain_stability_factor = 10.0;

/// C_m under mu0 and mu per (n, m) with the bound-chain ratio
/// |diff| n^gamma / sum_j |c_j| ||P (R_J0(z_j) - R_J(z_j)) P||_1, P the window
/// n -+ 2 m n^beta'. The sweep's constant is the largest ratio.
inline RunResult run_stability_sweep(const ExperimentConfig& in, const RunOptions& opt = {}) {
    const auto cfg = detail::prepare(in, "stability");
    auto r = detail::start(cfg, {"n", "m", "C_mu0", "C_mu", "diff", "abs_diff", "truncation_estimate",
                                 "truncation_mu0", "truncation_mu", "unconverged", "resolvent_norm", "chain_C"});
    const auto f = TestFunction::parse(cfg.test_function);
    const auto J0 = free_jacobi();
    const auto J = perturbed_operator(cfg);
    const auto op_id = detail::operator_id(cfg);
    const int K = std::max(4, *std::max_element(cfg.m_list.begin(), cfg.m_list.end()));
    const bool has_poles = f.kind() == TestFunction::Kind::imag_rational;
    auto& cache = detail::CumulantCache::instance();
    for (SiteIndex n : cfg.n_grid) {
        detail::note(opt, "stability: n = " + std::to_string(n));
        const auto mc = MesoscopicConfig::make(cfg.gamma, cfg.x0, n);
        const auto a = cache.get("free", J0, f, mc, K, opt);
        const auto b = cache.get(op_id, J, f, mc, K, opt);

        const double est = std::max(a.truncation_estimate, b.truncation_estimate);
        const SiteIndex N = mc.truncation_size;
        const auto T0 = truncate(J0, 1, N);
        const auto TJ = truncate(J, 1, N);
        std::vector<std::pair<SiteIndex, double>> sites;
        if (J.perturbation()) sites = J.perturbation()->sites_in(1, N);
        for (int m : cfg.m_list) {
            const auto i = static_cast<std::size_t>(m - 2);
            const double diff = a.values[i] - b.values[i];
            double resnorm = detail::nan, chain = detail::nan;
            if (has_poles) {
                const auto cw = comparison_window(n, m, cfg.beta_prime);
                const ProjectionWindow w(cw.lo, std::min(cw.hi, N));
                resnorm = 0.0;
                for (const auto& p : f.poles()) {
                    const cplx z = cfg.x0 + p.eta / mc.scale();
                    resnorm += std::abs(p.c) * trace_norm(diagonal_perturbation_difference(T0, TJ, z, w, sites));
                }
                if (resnorm > 0.0) chain = std::abs(diff) * mc.scale() / resnorm;
            }
            r.add_row({static_cast<double>(n), static_cast<double>(m), a.values[i], b.values[i], diff, std::abs(diff),
                       est, static_cast<double>(a.truncation_used), static_cast<double>(b.truncation_used),
                       est > CompareOptions{}.flag_threshold ? 1.0 : 0.0, resnorm, chain});
        }
    }
    for (int m : cfg.m_list) {
        std::vector<double> d, chain;
        for (const auto& row : r.rows)
            if (row[1] == m) {
                d.push_back(row[r.column("abs_diff")]);
                if (std::isfinite(row[r.column("chain_C")])) chain.push_back(row[r.column("chain_C")]);
            }
        const std::string tag = "diff(" + std::to_string(m) + ")";
        r.checks.push_back({tag + " decreasing in n", detail::decreasing(d), detail::join(d)});
        r.checks.push_back({tag + " at the largest n below 30% of the smallest", detail::shrinks_to(d, 0.3),
                            "ratio " + detail::fmt17(d.back() / d.front())});
        if (!chain.empty()) {
            const double hi = *std::max_element(chain.begin(), chain.end());
            r.summary.emplace_back("chain_C_fit_m" + std::to_string(m), hi);
            r.checks.push_back({"chain constant for m = " + std::to_string(m) + " stays within " +
                                    detail::fmt17(chain_stability_factor) + "x of its smallest-n value",
                                hi <= chain_stability_factor * chain.front(), "values " + detail::join(chain)});
        }
    }
    return r;
}

/// 2 C_2 against sigma_f^2 and the decay of |C_3|, |C_4| under mu0 and mu.
inline RunResult run_clt_check(const ExperimentConfig& in, const RunOptions& opt = {}) {
    const auto cfg = detail::prepare(in, "clt");
    auto r = detail::start(cfg, {"n", "two_C2_mu0", "two_C2_mu", "sigma2", "rel_gap", "abs_C3_mu0", "abs_C4_mu0",
                                 "abs_C3_mu", "abs_C4_mu", "diff2", "truncation_estimate"});
    const auto f = TestFunction::parse(cfg.test_function);
    const auto J0 = free_jacobi();
    const auto J = perturbed_operator(cfg);
    const auto op_id = detail::operator_id(cfg);
    const int K = std::max(4, *std::max_element(cfg.m_list.begin(), cfg.m_list.end()));
    const double sigma2 = sigma_f_squared(f).sigma2;
    auto& cache = detail::CumulantCache::instance();
    for (SiteIndex n : cfg.n_grid) {
        detail::note(opt, "clt: n = " + std::to_string(n));
        const auto mc = MesoscopicConfig::make(cfg.gamma, cfg.x0, n);
        const auto a = cache.get("free", J0, f, mc, K, opt);
        const auto b = cache.get(op_id, J, f, mc, K, opt);
        // values hold C_2, C_3, C_4, ...
        const double gap = sigma2 != 0.0 ? std::abs(2.0 * a.values[0] - sigma2) / sigma2 : std::abs(2.0 * a.values[0]);
        r.add_row({static_cast<double>(n), 2.0 * a.values[0], 2.0 * b.values[0], sigma2, gap, std::abs(a.values[1]),
                   std::abs(a.values[2]), std::abs(b.values[1]), std::abs(b.values[2]), a.values[0] - b.values[0],
                   std::max(a.truncation_estimate, b.truncation_estimate)});
    }
    const auto gap = r.column_values("rel_gap");
    const auto c3 = r.column_values("abs_C3_mu0"), c4 = r.column_values("abs_C4_mu0");
    r.summary = {{"sigma2", sigma2}, {"rel_gap_last", gap.back()}};
    r.checks.push_back({"variance gap decreasing in n", detail::decreasing(gap), detail::join(gap)});
    r.checks.push_back({"relative variance gap at the largest n below 15%", gap.back() < 0.15,
                        detail::fmt17(gap.back())});
    r.checks.push_back({"|C3| at the largest n below half the smallest", detail::shrinks_to(c3, 0.5), detail::join(c3)});
    r.checks.push_back({"|C4| at the largest n below half the smallest", detail::shrinks_to(c4, 0.5), detail::join(c4)});
    bool consistent = true;
    for (const auto& row : r.rows) {
        const double lhs = row[r.column("two_C2_mu0")] - row[r.column("two_C2_mu")];
        const double rhs = 2.0 * row[r.column("diff2")];
        consistent = consistent && std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(row[r.column("two_C2_mu0")]));
    }
    r.checks.push_back({"mu and mu0 columns differ by the stability diff", consistent, ""});
    return r;
}

/// Monte Carlo kappa_1, kappa_2 of the linear statistic under OPE_n(mu0) against
/// the trace formula and a one-point quadrature.
inline RunResult run_mc_crosscheck(const ExperimentConfig& in, const RunOptions& opt = {}) {
    const auto cfg = detail::prepare(in, "mc");
    auto r = detail::start(cfg, {"n", "samples", "k1", "k1_se", "trace_mean", "quad_mean", "k2", "k2_se", "two_C2",
                                 "z_k1_trace", "z_k1_quad", "z_k2"});
    const auto f = TestFunction::parse(cfg.test_function);
    const auto mu = MeasureDensity::semicircle();
    const auto J0 = free_jacobi();
    auto zscore = [](double est, double target, double se) {
        if (se > 0.0) return (est - target) / se;
        return est == target ? 0.0 : std::numeric_limits<double>::infinity();
    };
    for (SiteIndex n : cfg.n_grid) {
        detail::note(opt, "mc: n = " + std::to_string(n) + ", " + std::to_string(cfg.samples) + " samples");
        const auto batch = sample_ope_batch(mu, n, cfg.samples, cfg.seed);
        const auto stats = linear_statistics(batch, f, cfg.gamma, cfg.x0);
        const auto k = mc_cumulants(stats, 2);
        const auto mcfg = MesoscopicConfig::make(cfg.gamma, cfg.x0, n);
        const int orders[] = {2};
        const auto tr = operator_cumulants(J0, f, mcfg, orders);
        const double mean = trace_mean(apply_scaled_function(truncate(J0, 1, tr.truncation_used), f, mcfg), n);
        const auto table = RecurrenceTable::from(J0, n);
        const double s = mcfg.scale();
        const double quad = mu.integrate([&](double x) {
            const double v = f(s * (x - cfg.x0));
            return v == 0.0 ? 0.0 : v * cd_kernel(x, x, table, n);
        });
        const double two_c2 = 2.0 * tr.values[0];
        r.add_row({static_cast<double>(n), static_cast<double>(cfg.samples), k[0].value, k[0].stderr_, mean, quad,
                   k[1].value, k[1].stderr_, two_c2, zscore(k[0].value, mean, k[0].stderr_),
                   zscore(k[0].value, quad, k[0].stderr_), zscore(k[1].value, two_c2, k[1].stderr_)});
    }
    for (const auto& [col, label] : {std::pair{"z_k1_trace", "kappa1 vs trace mean within 3 SE"},
                                     std::pair{"z_k1_quad", "kappa1 vs quadrature within 3 SE"},
                                     std::pair{"z_k2", "kappa2 vs 2 C2 within 3 SE"}}) {
        const auto z = r.column_values(col);
        r.checks.push_back({label, std::all_of(z.begin(), z.end(), [](double v) { return std::abs(v) <= 3.0; }),
                            "z " + detail::join(z)});
    }
    return r;
}

inline RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    if (cfg.experiment == "resolvent") return run_resolvent_validation(cfg, opt);
    if (cfg.experiment == "decoupling") return run_decoupling_check(cfg, opt);
    if (cfg.experiment == "hankel") return run_hankel_scaling(cfg, opt);
    if (cfg.experiment == "stability") return run_stability_sweep(cfg, opt);
    if (cfg.experiment == "clt") return run_clt_check(cfg, opt);
    if (cfg.experiment == "mc") return run_mc_crosscheck(cfg, opt);
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace mesofluct::experiments
