#pragma once

// Cumulants of mesoscopic linear statistics X = sum_k f(n^gamma (x_k - x0)).
//
// Convention: K(t) = log E exp(tX) = sum_j C_j t^j, so C_j = kappa_j / j! and
// C_2 is half the variance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mesofluct/error.hpp"
#include "mesofluct/jacobi.hpp"
#include "mesofluct/linalg.hpp"
#include "mesofluct/test_function.hpp"

namespace mesofluct {

struct MesoscopicConfig {
    double gamma;
    double x0;
    SiteIndex n;
    SiteIndex truncation_size;
    double c_tr = 20.0;

    /// n + max(ceil(c_tr n^gamma ln n), 200).
    static SiteIndex default_truncation(SiteIndex n, double gamma, double c_tr = 20.0) {
        const double nd = static_cast<double>(n);
        const auto tail = static_cast<SiteIndex>(std::ceil(c_tr * std::pow(nd, gamma) * std::log(nd)));
        return n + std::max<SiteIndex>(tail, 200);
    }

    static MesoscopicConfig make(double gamma, double x0, SiteIndex n, double c_tr = 20.0) {
        detail::require(n >= 1, "MesoscopicConfig: n must be >= 1");
        MesoscopicConfig cfg{gamma, x0, n, default_truncation(n, gamma, c_tr), c_tr};
        cfg.validate();
        return cfg;
    }

    double scale() const { return std::pow(static_cast<double>(n), gamma); }

    void validate() const {
        detail::require(gamma > 0.0 && gamma < 1.0, "MesoscopicConfig: gamma must lie in (0,1)");
        detail::require(x0 > -2.0 && x0 < 2.0, "MesoscopicConfig: x0 must lie in (-2,2)");
        detail::require(n >= 1, "MesoscopicConfig: n must be >= 1");
        detail::require(truncation_size > n, "MesoscopicConfig: N_tr must exceed n");
        const double nd = static_cast<double>(n);
        const auto need = static_cast<SiteIndex>(std::ceil(c_tr * std::pow(nd, gamma) * std::log(nd)));
        detail::require(truncation_size - n >= need, "MesoscopicConfig: truncation buffer too small");
    }

    MesoscopicConfig with_truncation(SiteIndex N) const {
        MesoscopicConfig c = *this;
        c.truncation_size = N;
        return c;
    }
};

struct CumulantReport {
    int m;
    SiteIndex n;
    double value_mu0;
    double value_mu;
    double diff;
    double truncation_estimate;
    bool unconverged_tail;
};

struct VarianceTarget {
    double sigma2;
    double quadrature_error;
};

/// Eigenvalues of f(n^gamma (T - x0)) together with the eigenvectors of T.
struct ScaledSpectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

inline ScaledSpectrum scaled_spectrum(const TruncatedJacobi& T, const TestFunction& f,
                                      const MesoscopicConfig& cfg) {
    detail::require(f.real_valued(), "apply_scaled_function: f must be real-valued");
    detail::require(T.origin() == 1 && T.size() == cfg.truncation_size,
                    "apply_scaled_function: T must cover [1, N_tr]");
    auto eig = tridiagonal_eigen(T.diag(), T.offdiag());
    const double s = cfg.scale();
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) eig.values[i] = f(s * (eig.values[i] - cfg.x0));
    return {std::move(eig.values), std::move(eig.vectors)};
}

/// f(n^gamma (T - x0 I)) as a dense matrix.
inline Eigen::MatrixXd apply_scaled_function(const TruncatedJacobi& T, const TestFunction& f,
                                             const MesoscopicConfig& cfg) {
    const auto S = scaled_spectrum(T, f, cfg);
    Eigen::MatrixXd F = S.vectors * S.values.asDiagonal() * S.vectors.transpose();
    return (0.5 * (F + F.transpose())).eval();
}

/// Tr F P_n.
inline double trace_mean(const Eigen::MatrixXd& F, SiteIndex n) {
    detail::require(n >= 0 && n <= F.rows() && F.rows() == F.cols(), "trace_mean: bad block size");
    return F.topLeftCorner(n, n).trace();
}

/// B_l = P_n F^l P_n (as n x n blocks) for l = 1..L.
struct ProjectedPowers {
    std::vector<Eigen::MatrixXd> B;  // B[l - 1]

    int max_power() const { return static_cast<int>(B.size()); }
    const Eigen::MatrixXd& operator()(int l) const { return B[static_cast<std::size_t>(l - 1)]; }
};

inline ProjectedPowers projected_powers(const Eigen::MatrixXd& F, SiteIndex n, int L) {
    detail::require(F.rows() == F.cols(), "projected_powers: F must be square");
    detail::require(n >= 1 && n <= F.rows(), "projected_powers: need 1 <= n <= N_tr");
    detail::require(L >= 1, "projected_powers: L must be >= 1");
    ProjectedPowers out;
    Eigen::MatrixXd FlP = F.leftCols(n);
    for (int l = 1; l <= L; ++l) {
        if (l > 1) FlP = (F * FlP).eval();
        out.B.push_back(FlP.topRows(n));
    }
    return out;
}

/// Same blocks from W = first n rows of the eigenvectors: B_l = W D^l W^T,
/// evaluated with symmetric rank-k updates split by the sign of d^l.
inline ProjectedPowers projected_powers(const Eigen::MatrixXd& W, const Eigen::VectorXd& d, int L) {
    detail::require(W.cols() == d.size(), "projected_powers: eigenvector/eigenvalue size mismatch");
    detail::require(L >= 1, "projected_powers: L must be >= 1");
    const Eigen::Index n = W.rows(), N = W.cols();
    ProjectedPowers out;
    for (int l = 1; l <= L; ++l) {
        std::vector<Eigen::Index> pos, neg;
        for (Eigen::Index k = 0; k < N; ++k) {
            const double v = std::pow(d[k], l);
            if (v > 0.0) pos.push_back(k);
            else if (v < 0.0) neg.push_back(k);
        }
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
        auto update = [&](const std::vector<Eigen::Index>& cols, double sign) {
            if (cols.empty()) return;
            Eigen::MatrixXd Ws(n, static_cast<Eigen::Index>(cols.size()));
            for (std::size_t c = 0; c < cols.size(); ++c)
                Ws.col(static_cast<Eigen::Index>(c)) =
                    W.col(cols[c]) * std::sqrt(std::abs(std::pow(d[cols[c]], l)));
            B.selfadjointView<Eigen::Lower>().rankUpdate(Ws, sign);
        };
        update(pos, 1.0);
        update(neg, -1.0);
        B.triangularView<Eigen::StrictlyUpper>() = B.transpose();
        out.B.push_back(std::move(B));
    }
    return out;
}

namespace detail {

inline void compositions_into(int m, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
    if (m == 0) {
        out.push_back(prefix);
        return;
    }
    for (int l = 1; l <= m; ++l) {
        prefix.push_back(l);
        compositions_into(m - l, prefix, out);
        prefix.pop_back();
    }
}

inline double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

/// Smallest word among the rotations of s and of its reversal. Traces of
/// products of symmetric matrices are invariant under both.
inline std::vector<int> canonical_cycle(std::vector<int> s) {
    std::vector<int> best = s;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t r = 0; r < s.size(); ++r) {
            std::rotate(s.begin(), s.begin() + 1, s.end());
            best = std::min(best, s);
        }
        std::reverse(s.begin(), s.end());
    }
    return best;
}

class ProductCache {
public:
    explicit ProductCache(const ProjectedPowers& P) : P_(P) {}

    double trace(const std::vector<int>& word) {
        const auto key = canonical_cycle(word);
        if (auto it = traces_.find(key); it != traces_.end()) return it->second;
        double t;
        if (key.size() == 1) {
            t = P_(key[0]).trace();
        } else if (key.size() == 2) {
            t = P_(key[0]).cwiseProduct(P_(key[1])).sum();
        } else {
            const auto h = static_cast<std::ptrdiff_t>((key.size() + 1) / 2);
            const auto& L = product({key.begin(), key.begin() + h});
            const std::vector<int> right(key.begin() + h, key.end());
            if (right.size() == 1) {
                t = L.cwiseProduct(P_(right[0])).sum();
            } else {
                const auto& R = product(right);
                t = L.cwiseProduct(R.transpose()).sum();
            }
        }
        traces_.emplace(key, t);
        return t;
    }

private:
    const Eigen::MatrixXd& product(const std::vector<int>& word) {
        if (word.size() == 1) return P_(word[0]);
        if (auto it = products_.find(word); it != products_.end()) return it->second;
        const std::vector<int> head(word.begin(), word.end() - 1);
        Eigen::MatrixXd M = product(head) * P_(word.back());
        return products_.emplace(word, std::move(M)).first->second;
    }

    const ProjectedPowers& P_;
    std::map<std::vector<int>, double> traces_;
    std::map<std::vector<int>, Eigen::MatrixXd> products_;
};

}  // namespace detail

/// All compositions of m (ordered tuples of positive integers summing to m).
inline std::vector<std::vector<int>> compositions(int m) {
    detail::require(m >= 1, "compositions: m must be >= 1");
    std::vector<std::vector<int>> out;
    std::vector<int> prefix;
    detail::compositions_into(m, prefix, out);
    return out;
}

/// sum_j ((-1)^{j+1}/j) sum_{compositions of m into j parts} 1/(l_1!...l_j!).
inline double composition_coefficient_sum(int m) {
    double s = 0.0;
    for (const auto& c : compositions(m)) {
        const auto j = static_cast<int>(c.size());
        double w = ((j % 2) ? 1.0 : -1.0) / j;
        for (int l : c) w /= detail::factorial(l);
        s += w;
    }
    return s;
}

inline constexpr int default_max_cumulant_order = 6;

/// Cumulants C_m for every m in orders, from the projected powers.
inline std::vector<double> cumulants_from_powers(const ProjectedPowers& P, std::span<const int> orders,
                                                 int max_order = default_max_cumulant_order) {
    detail::ProductCache cache(P);
    std::vector<double> out;
    for (int m : orders) {
        detail::require(m >= 2, "trace_cumulant: m must be >= 2 (use trace_mean for m = 1)");
        detail::require(m <= max_order, "trace_cumulant: m exceeds the configured maximum order");
        detail::require(m <= P.max_power(), "trace_cumulant: not enough projected powers");
        double s = 0.0;
        for (const auto& c : compositions(m)) {
            const auto j = static_cast<int>(c.size());
            double w = ((j % 2) ? 1.0 : -1.0) / j;
            for (int l : c) w /= detail::factorial(l);
            s += w * cache.trace(c);
        }
        s -= composition_coefficient_sum(m) * P(m).trace();
        out.push_back(s);
    }
    return out;
}

/// C_m from the trace formula applied to the dense matrix F.
inline double trace_cumulant(const Eigen::MatrixXd& F, SiteIndex n, int m,
                             int max_order = default_max_cumulant_order) {
    detail::require(m >= 2, "trace_cumulant: m must be >= 2 (use trace_mean for m = 1)");
    detail::require(m <= max_order, "trace_cumulant: m exceeds the configured maximum order");
    const int orders[] = {m};
    return cumulants_from_powers(projected_powers(F, n, m), orders, max_order)[0];
}

struct FredholmOptions {
    int nodes = 128;
};

/// Taylor coefficients C_1..C_{m_max} of L(t) = log det(I + (e^{tF} - I)P_n),
/// computed by Cauchy's integral on the circle |t| = h (h <= 0 picks 0.5/||F||).
inline std::vector<double> fredholm_cumulants(const Eigen::MatrixXd& F, SiteIndex n, int m_max, double h = 0.0,
                                              FredholmOptions opt = {}) {
    detail::require(F.rows() == F.cols(), "fredholm_cumulants: F must be square");
    detail::require(n >= 1 && n <= F.rows(), "fredholm_cumulants: need 1 <= n <= N_tr");
    detail::require(m_max >= 1, "fredholm_cumulants: m_max must be >= 1");
    detail::require(opt.nodes > 2 * m_max, "fredholm_cumulants: too few contour nodes");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (F + F.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("fredholm_cumulants: eigensolver failed");
    const Eigen::VectorXd& d = es.eigenvalues();
    const double norm = d.cwiseAbs().maxCoeff();
    if (norm == 0.0) return std::vector<double>(static_cast<std::size_t>(m_max), 0.0);
    if (h <= 0.0) h = 0.5 / norm;
    if (std::exp(h * norm) - 1.0 >= 1.0)
        throw InvalidArgument("fredholm_cumulants: contour radius violates ||e^{tF} - I|| < 1");

    const Eigen::MatrixXcd W = es.eigenvectors().topRows(n).cast<cplx>();
    std::vector<cplx> acc(static_cast<std::size_t>(m_max), 0.0);
    const int K = opt.nodes;
    for (int p = 0; p < K; ++p) {
        const cplx t = std::polar(h, 2.0 * std::numbers::pi * p / K);
        Eigen::VectorXcd e(d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i) e[i] = std::exp(t * d[i]);
        const Eigen::MatrixXcd E = W * e.asDiagonal() * W.transpose();
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(E, false);
        if (ces.info() != Eigen::Success) throw NumericalError("fredholm_cumulants: eigensolver failed");
        cplx L = 0.0;
        for (Eigen::Index i = 0; i < ces.eigenvalues().size(); ++i) {
            const cplx mu = ces.eigenvalues()[i];
            if (std::abs(mu) < 1e-12 || mu.real() <= 0.0)
                throw NumericalError("fredholm_cumulants: determinant degenerates on the contour");
            L += std::log(mu);
        }
        cplx tk = 1.0;
        for (int k = 1; k <= m_max; ++k) {
            tk *= t;
            acc[static_cast<std::size_t>(k - 1)] += L / tk;
        }
    }
    std::vector<double> out;
    for (const auto& a : acc) out.push_back(a.real() / K);
    return out;
}

struct CompareOptions {
    int max_order = default_max_cumulant_order;
    bool adaptive = true;
    double adaptive_tol = 1e-8;
    int max_doublings = 3;
    double flag_threshold = 1e-6;
};

/// Cumulants of one operator at a given truncation size.
inline std::vector<double> truncated_cumulants(const JacobiOperator& J, const TestFunction& f,
                                               const MesoscopicConfig& cfg, std::span<const int> orders,
                                               int max_order = default_max_cumulant_order) {
    detail::require(!orders.empty(), "truncated_cumulants: empty order list");
    const int L = *std::max_element(orders.begin(), orders.end());
    ProjectedPowers P;
    {
        auto S = scaled_spectrum(truncate(J, 1, cfg.truncation_size), f, cfg);
        Eigen::MatrixXd W = S.vectors.topRows(cfg.n);
        S.vectors.resize(0, 0);
        P = projected_powers(W, S.values, L);
    }
    auto out = cumulants_from_powers(P, orders, max_order);
    for (double v : out)
        if (!std::isfinite(v)) throw NumericalError("truncated_cumulants: non-finite cumulant");
    return out;
}

struct OperatorCumulants {
    std::vector<double> values;
    double truncation_estimate;  // max over orders of the change under tail doubling
    SiteIndex truncation_used;
};

/// Cumulants with the tail-doubling estimate: the buffer N_tr - n is doubled
/// (repeatedly when adaptive) until the values move by less than adaptive_tol.
inline OperatorCumulants operator_cumulants(const JacobiOperator& J, const TestFunction& f,
                                            const MesoscopicConfig& cfg, std::span<const int> orders,
                                            const CompareOptions& opt = {}) {
    cfg.validate();
    SiteIndex N = cfg.truncation_size;
    auto values = truncated_cumulants(J, f, cfg, orders, opt.max_order);
    double est = 0.0;
    for (int k = 0; k <= opt.max_doublings; ++k) {
        const SiteIndex N2 = cfg.n + 2 * (N - cfg.n);
        auto finer = truncated_cumulants(J, f, cfg.with_truncation(N2), orders, opt.max_order);
        est = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) est = std::max(est, std::abs(finer[i] - values[i]));
        if (!opt.adaptive || (k == 0 && est < opt.adaptive_tol)) break;
        values = std::move(finer);
        N = N2;
        if (est < opt.adaptive_tol) break;
    }
    return {std::move(values), est, N};
}

inline std::vector<CumulantReport> reports_from(const OperatorCumulants& mu0, const OperatorCumulants& mu,
                                                SiteIndex n, std::span<const int> orders,
                                                double flag_threshold = 1e-6) {
    std::vector<CumulantReport> out;
    const double est = std::max(mu0.truncation_estimate, mu.truncation_estimate);
    for (std::size_t i = 0; i < orders.size(); ++i)
        out.push_back({orders[i], n, mu0.values[i], mu.values[i], mu0.values[i] - mu.values[i], est,
                       est > flag_threshold});
    return out;
}

/// C_m under mu_0 (operator J0) and mu (operator J) for each m in orders.
inline std::vector<CumulantReport> compare_cumulants(const JacobiOperator& J0, const JacobiOperator& J,
                                                     const TestFunction& f, const MesoscopicConfig& cfg,
                                                     std::span<const int> orders, const CompareOptions& opt = {}) {
    const auto a = operator_cumulants(J0, f, cfg, orders, opt);
    const auto b = operator_cumulants(J, f, cfg, orders, opt);
    return reports_from(a, b, cfg.n, orders, opt.flag_threshold);
}

struct QuadratureSpec {
    double tolerance = 1e-11;
    unsigned max_depth = 15;
    double band = 1e-6;
};

/// sigma_f^2 = (1/4pi^2) int int ((f(x) - f(y))/(x - y))^2 dx dy.
inline VarianceTarget sigma_f_squared(const TestFunction& f, const QuadratureSpec& quad = {}) {
    detail::require(f.real_valued(), "sigma_f_squared: f must be real-valued");
    using boost::math::quadrature::gauss_kronrod;
    using GK = gauss_kronrod<double, 61>;
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> breaks;
    if (f.kind() == TestFunction::Kind::generic_c1) {
        if (std::isfinite(f.support_radius())) breaks = {-f.support_radius(), f.support_radius()};
    } else {
        for (const auto& p : f.poles()) breaks.push_back(p.eta.real());
    }
    if (breaks.empty()) breaks.push_back(0.0);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double inner_err = 0.0;
    auto inner = [&](double x) {
        const double fx = f(x), dfx = f.derivative(x);
        auto g = [&](double u) {
            if (u < quad.band) return 2.0 * dfx * dfx;
            const double a = (f(x + u) - fx) / u, b = (fx - f(x - u)) / u;
            return a * a + b * b;
        };
        std::vector<double> cuts{0.0};
        for (double b : breaks)
            if (std::abs(b - x) > 0.0) cuts.push_back(std::abs(b - x));
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double total = 0.0;
        for (std::size_t i = 0; i < cuts.size(); ++i) {
            const double lo = cuts[i], hi = i + 1 < cuts.size() ? cuts[i + 1] : inf;
            double err = 0.0;
            total += GK::integrate(g, lo, hi, quad.max_depth, quad.tolerance, &err);
            inner_err = std::max(inner_err, err);
        }
        return total;
    };

    double value = 0.0, err_sum = 0.0;
    std::vector<double> edges{-inf};
    edges.insert(edges.end(), breaks.begin(), breaks.end());
    edges.push_back(inf);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        double err = 0.0;
        value += GK::integrate(inner, edges[i], edges[i + 1], quad.max_depth, quad.tolerance, &err);
        err_sum += err;
    }
    const double scale = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi);
    value *= scale;
    const double qerr = (err_sum + inner_err) * scale;
    if (!std::isfinite(value) || qerr > std::max(1e-6, 1e-4 * std::abs(value)))
        throw NumericalError("sigma_f_squared: quadrature did not converge");
    return {std::max(value, 0.0), qerr};
}

}  // namespace mesofluct
