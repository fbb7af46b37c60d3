#pragma once

// Hankel matrices with symbol q^k, their trace norms, and the majorant bound
// ||H||_1 <= 2 Bconst (|h(0)| + sqrt2 (A + sqrt(A B))) for h(x) = |q|^x.

#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mesofluct/error.hpp"
#include "mesofluct/linalg.hpp"
#include "mesofluct/resolvent.hpp"

namespace mesofluct {

/// Finite section (j, k = 0..size-1) of the Hankel matrix q^{j+k}.
struct HankelMatrix {
    cplx q;
    Eigen::Index size;

    cplx entry(Eigen::Index j, Eigen::Index k) const { return ipow(q, j + k); }

    /// v_j = q^j, so that the matrix is v v^T.
    Eigen::VectorXcd symbol_vector() const {
        Eigen::VectorXcd v(size);
        cplx p = 1.0;
        for (Eigen::Index j = 0; j < size; ++j, p *= q) v[j] = p;
        return v;
    }

    Eigen::MatrixXcd dense() const {
        const auto v = symbol_vector();
        return v * v.transpose();
    }
};

inline HankelMatrix build_hankel(cplx q, Eigen::Index size) {
    detail::require(std::abs(q) < 1.0, "build_hankel: |q| must be < 1");
    detail::require(size >= 1, "build_hankel: size must be >= 1");
    return {q, size};
}

/// Size beyond which |q|^{2 size} < 1e-14.
inline Eigen::Index effective_hankel_size(cplx q) {
    const double a = std::abs(q);
    detail::require(a < 1.0, "effective_hankel_size: |q| must be < 1");
    if (a == 0.0) return 1;
    return static_cast<Eigen::Index>(std::ceil(std::log(1e-14) / (2.0 * std::log(a)))) + 1;
}

/// sum_{j<size} |q|^{2j}; the infinite section when size is empty.
inline double hankel_trace_norm_exact(cplx q, std::optional<Eigen::Index> size = std::nullopt) {
    detail::require(std::abs(q) < 1.0, "hankel_trace_norm_exact: |q| must be < 1");
    const double Q = std::norm(q);
    if (!size) return Q == 0.0 ? 1.0 : -1.0 / std::expm1(std::log(Q));
    detail::require(*size >= 1, "hankel_trace_norm_exact: size must be >= 1");
    // -expm1(size log Q) / -expm1(log Q) stays accurate as |q| -> 1.
    if (Q == 0.0) return 1.0;
    const double lq = std::log(Q);
    return std::expm1(static_cast<double>(*size) * lq) / std::expm1(lq);
}

struct BesovBoundReport {
    double A_val;
    double B_val;
    double bound;
    double exact;
    double Bconst;
};

/// Majorant h(x) = exp(-d x / n^gamma) with d = -n^gamma log|q| (so h(k) = |q|^k).
inline BesovBoundReport besov_functionals(cplx q, double gamma, SiteIndex n, double Bconst = 1.0) {
    const double r = std::abs(q);
    detail::require(r > 0.0 && r < 1.0, "besov_functionals: need 0 < |q| < 1");
    detail::require(gamma > 0.0 && gamma < 1.0, "besov_functionals: gamma must lie in (0,1)");
    detail::require(n >= 1, "besov_functionals: n must be >= 1");
    detail::require(Bconst > 0.0, "besov_functionals: Bconst must be positive");

    const double Q = r * r;
    const double s = -std::log(r);
    const double a = 2.0 * s;
    const double om = -std::expm1(std::log(Q));  // 1 - Q

    // sum Q^k = 1/(1-Q), sum k^2 Q^k = Q(1+Q)/(1-Q)^3.
    const double A = std::pow(Q * (1.0 + Q), 0.25) / om;

    // int_1^inf x^2 s^2 e^{-2sx} dx and int_1^inf x^4 s^2 e^{-2sx} dx.
    const double ea = std::exp(-a);
    const double xh = s * s * ea * (a * a + 2 * a + 2) / (a * a * a);
    const double x2h = s * s * ea * (std::pow(a, 4) + 4 * std::pow(a, 3) + 12 * a * a + 24 * a + 24) / std::pow(a, 5);
    const double B = std::sqrt(std::sqrt(xh) * std::sqrt(x2h));

    const double h0 = 1.0;
    const double bound = 2.0 * Bconst * (h0 + std::sqrt(2.0) * (A + std::sqrt(A * B)));
    return {A, B, bound, hankel_trace_norm_exact(q), Bconst};
}

/// Bconst frozen by the dominance calibration (smallest power of two with
/// bound >= exact over the test grid).
inline constexpr double calibrated_bconst = 0.25;

struct HankelGridPoint {
    cplx q;
    double gamma;
    SiteIndex n;
};

/// Smallest power of two c with besov_functionals(q, gamma, n, c).bound >= exact
/// for every (q, gamma, n) in the grid.
inline double calibrate_bconst(std::span<const HankelGridPoint> grid) {
    detail::require(!grid.empty(), "calibrate_bconst: empty grid");
    double worst = 0.0;
    for (const auto& p : grid) {
        const auto r = besov_functionals(p.q, p.gamma, p.n, 1.0);
        worst = std::max(worst, r.exact / r.bound);
    }
    return std::exp2(std::ceil(std::log2(worst)));
}

struct ScalingFit {
    double exponent;
    double r2;
};

/// Least-squares slope of log norm against log n.
inline ScalingFit scaling_fit(std::span<const std::pair<double, double>> values) {
    if (values.size() < 4) throw InvalidArgument("scaling_fit: need at least 4 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto [n, v] = values[i];
        detail::require(n > 0.0 && v > 0.0, "scaling_fit: values must be positive");
        if (i) detail::require(n > values[i - 1].first, "scaling_fit: n must be strictly increasing");
        const double x = std::log(n), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double k = static_cast<double>(values.size());
    const double vxx = sxx - sx * sx / k, vxy = sxy - sx * sy / k, vyy = syy - sy * sy / k;
    const double slope = vxy / vxx;
    const double r2 = vyy <= 1e-300 ? 1.0 : (vxy * vxy) / (vxx * vyy);
    return {slope, r2};
}

/// Exact trace norms 1/(1 - |q_n|^2) with q_n = phi(z_n) at the given n.
inline std::vector<std::pair<double, double>> exact_hankel_scaling(double x0, cplx eta, double gamma,
                                                                   std::span<const SiteIndex> ns) {
    std::vector<std::pair<double, double>> out;
    for (SiteIndex n : ns)
        out.emplace_back(static_cast<double>(n), hankel_trace_norm_exact(phi(SpectralShift(x0, eta, gamma, n).z())));
    return out;
}

}  // namespace mesofluct
