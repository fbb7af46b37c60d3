#pragma once

// Resolvents of Jacobi matrices: the Joukowski map, the closed-form free
// resolvent, numeric resolvents of finite sections, decoupled operators and
// the rank-one comparison matrices G = lambda T + R.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mesofluct/error.hpp"
#include "mesofluct/jacobi.hpp"
#include "mesofluct/linalg.hpp"

namespace mesofluct {

/// z_n = x0 + eta / n^gamma.
struct SpectralShift {
    double x0;
    cplx eta;
    double gamma;
    SiteIndex n;

    SpectralShift(double x0_, cplx eta_, double gamma_, SiteIndex n_)
        : x0(x0_), eta(eta_), gamma(gamma_), n(n_) {
        detail::require(x0 > -2.0 && x0 < 2.0, "SpectralShift: x0 must lie in (-2,2)");
        detail::require(eta.imag() != 0.0, "SpectralShift: Im eta must be nonzero");
        detail::require(gamma > 0.0 && gamma < 1.0, "SpectralShift: gamma must lie in (0,1)");
        detail::require(n >= 1, "SpectralShift: n must be >= 1");
    }

    double scale() const { return std::pow(static_cast<double>(n), gamma); }
    cplx z() const { return x0 + eta / scale(); }
};

/// Integer power by repeated squaring (k >= 0).
inline cplx ipow(cplx base, SiteIndex k) {
    detail::require(k >= 0, "ipow: negative exponent");
    cplx result = 1.0;
    while (k > 0) {
        if (k & 1) result *= base;
        base *= base;
        k >>= 1;
    }
    return result;
}

struct JoukowskiValue {
    cplx zeta;
    cplx phi;
};

/// The root of w^2 - zeta w + 1 = 0 inside the unit disk.
inline cplx phi(cplx zeta) {
    const bool on_cut = std::abs(zeta.imag()) < 1e-12 && std::abs(zeta.real()) <= 2.0 + 1e-12;
    if (on_cut || !std::isfinite(zeta.real()) || !std::isfinite(zeta.imag()))
        throw InvalidArgument("phi: argument is on (or within 1e-12 of) the cut [-2,2]");
    const cplx s = std::sqrt(zeta * zeta - 4.0);
    const cplx w1 = 0.5 * (zeta + s), w2 = 0.5 * (zeta - s);
    // The roots multiply to 1; inverting the larger one avoids cancellation.
    return 1.0 / (std::abs(w1) >= std::abs(w2) ? w1 : w2);
}

inline JoukowskiValue joukowski(cplx zeta) { return {zeta, phi(zeta)}; }

/// Entry (j,k) of (J0 - z)^{-1} for the free Jacobi matrix.
inline cplx free_resolvent_entry(SiteIndex j, SiteIndex k, cplx z) {
    detail::require(j >= 1 && k >= 1, "free_resolvent_entry: indices start at 1");
    const cplx p = phi(z);
    return (ipow(p, std::abs(k - j)) - ipow(p, j + k)) / (p - 1.0 / p);
}

/// Dense complex matrix on absolute row indices [row_origin, ...] and column
/// indices [col_origin, ...].
struct WindowedMatrix {
    SiteIndex row_origin = 1;
    SiteIndex col_origin = 1;
    Eigen::MatrixXcd values;

    SiteIndex row_last() const { return row_origin + values.rows() - 1; }
    SiteIndex col_last() const { return col_origin + values.cols() - 1; }

    cplx operator()(SiteIndex i, SiteIndex j) const {
        detail::require(i >= row_origin && i <= row_last() && j >= col_origin && j <= col_last(),
                        "WindowedMatrix: index outside the window");
        return values(i - row_origin, j - col_origin);
    }

    /// The block on rows/columns of `w` (which must lie inside this window).
    WindowedMatrix restrict(const ProjectionWindow& rows, const ProjectionWindow& cols) const {
        detail::require(rows.lo >= row_origin && rows.hi <= row_last() && cols.lo >= col_origin &&
                            cols.hi <= col_last(),
                        "WindowedMatrix::restrict: window outside the matrix");
        return {rows.lo, cols.lo,
                values.block(rows.lo - row_origin, cols.lo - col_origin, rows.size(), cols.size())};
    }

    WindowedMatrix restrict(const ProjectionWindow& w) const { return restrict(w, w); }
};

/// Max-norm of (T - z) R - I for R given on T's window.
inline double resolvent_residual(const TruncatedJacobi& T, cplx z, const Eigen::MatrixXcd& R) {
    const auto N = T.size();
    detail::require(R.rows() == N && R.cols() == N, "resolvent_residual: size mismatch");
    const auto d = T.diag();
    const auto e = T.offdiag();
    double worst = 0.0;
    for (Eigen::Index c = 0; c < N; ++c)
        for (Eigen::Index i = 0; i < N; ++i) {
            cplx v = (d[static_cast<std::size_t>(i)] - z) * R(i, c);
            if (i > 0) v += e[static_cast<std::size_t>(i - 1)] * R(i - 1, c);
            if (i + 1 < N) v += e[static_cast<std::size_t>(i)] * R(i + 1, c);
            if (i == c) v -= 1.0;
            worst = std::max(worst, std::abs(v));
        }
    return worst;
}

/// Factorisation of T - z for repeated column solves.
class TridiagonalResolvent {
public:
    TridiagonalResolvent(const TruncatedJacobi& T, cplx z, double max_condition = 1e14)
        : T_(T), z_(z), lu_(make_lu(T, z)) {
        const double cond = lu_.condition_estimate();
        if (!(cond <= max_condition))
            throw NumericalError("numeric resolvent: condition estimate " + std::to_string(cond) +
                                 " exceeds " + std::to_string(max_condition));
    }

    const TruncatedJacobi& op() const { return T_; }
    cplx z() const { return z_; }

    /// Columns (T - z)^{-1} e_k for absolute indices k, as a matrix on T's rows.
    Eigen::MatrixXcd columns(std::span<const SiteIndex> ks) const {
        Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(T_.size(), static_cast<Eigen::Index>(ks.size()));
        for (std::size_t c = 0; c < ks.size(); ++c) rhs(T_.local(ks[c]), static_cast<Eigen::Index>(c)) = 1.0;
        lu_.solve_in_place(rhs);
        return rhs;
    }

    Eigen::VectorXcd column(SiteIndex k) const {
        const SiteIndex ks[] = {k};
        return columns(ks).col(0);
    }

    /// The full inverse, with the residual check ||(T - z)R - I||_max < tol.
    WindowedMatrix full(double residual_tol = 1e-10) const {
        Eigen::MatrixXcd R = Eigen::MatrixXcd::Identity(T_.size(), T_.size());
        lu_.solve_in_place(R);
        const double res = resolvent_residual(T_, z_, R);
        if (!(res < residual_tol))
            throw NumericalError("numeric resolvent: residual " + std::to_string(res) +
                                 " exceeds tolerance");
        return {T_.origin(), T_.origin(), std::move(R)};
    }

private:
    static ComplexTridiagonalLU make_lu(const TruncatedJacobi& T, cplx z) {
        std::vector<cplx> d(T.diag().begin(), T.diag().end());
        for (auto& v : d) v -= z;
        std::vector<cplx> e(T.offdiag().begin(), T.offdiag().end());
        return {e, std::move(d), e};
    }

    TruncatedJacobi T_;
    cplx z_;
    ComplexTridiagonalLU lu_;
};

/// (T - zI)^{-1} by tridiagonal LU solves.
inline WindowedMatrix numeric_resolvent(const TruncatedJacobi& T, cplx z) {
    return TridiagonalResolvent(T, z).full();
}

struct CombesThomasFit {
    double C_hat;  // prefactor
    double d_hat;  // decay rate per index
    double r2;
    std::size_t pairs;
};

/// Least-squares fit log|R_jk| = log C - d |j - k| over pairs with |j - k| >= n^gamma.
inline CombesThomasFit combes_thomas_fit(const Eigen::MatrixXcd& R, SiteIndex n, double gamma) {
    detail::require(R.rows() == R.cols(), "combes_thomas_fit: square matrix expected");
    const double threshold = std::pow(static_cast<double>(n), gamma);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    std::size_t count = 0;
    for (Eigen::Index k = 0; k < R.cols(); ++k)
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto dist = static_cast<double>(k - j);
            const double mag = std::abs(R(j, k));
            if (dist < threshold || !(mag > 1e-300) || !std::isfinite(mag)) continue;
            const double y = std::log(mag);
            sx += dist;
            sy += y;
            sxx += dist * dist;
            sxy += dist * y;
            syy += y * y;
            ++count;
        }
    if (count < 50)
        throw NumericalError("combes_thomas_fit: only " + std::to_string(count) +
                             " usable off-diagonal pairs (need 50)");
    const auto c = static_cast<double>(count);
    const double vx = sxx - sx * sx / c, vy = syy - sy * sy / c, cxy = sxy - sx * sy / c;
    if (!(vx > 0.0)) throw NumericalError("combes_thomas_fit: degenerate distance range");
    const double slope = cxy / vx;
    const double intercept = (sy - slope * sx) / c;
    const double r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
    return {std::exp(intercept), -slope, r2, count};
}

/// The window [n - 2 m n^b, n + 2 m n^b] (integers only).
inline ProjectionWindow comparison_window(SiteIndex n, int m, double b) {
    const double half = 2.0 * m * std::pow(static_cast<double>(n), b);
    return ProjectionWindow::covering(static_cast<double>(n) - half, static_cast<double>(n) + half);
}

/// T with the couplings (c, c+1) removed at c = floor(n -+ 2 m n^beta).
struct DecoupledOperator {
    TruncatedJacobi op;
    SiteIndex cut_lo;
    SiteIndex cut_hi;
    SiteIndex n;
    int m;
    double beta;

    /// The middle block [cut_lo + 1, cut_hi].
    ProjectionWindow middle() const { return {cut_lo + 1, cut_hi}; }
};

inline DecoupledOperator decouple(const TruncatedJacobi& T, SiteIndex n, int m, double beta) {
    detail::require(m >= 1, "decouple: m must be >= 1");
    detail::require(beta > 0.0 && beta < 1.0, "decouple: beta must lie in (0,1)");
    const double half = 2.0 * m * std::pow(static_cast<double>(n), beta);
    const auto lo = static_cast<SiteIndex>(std::floor(static_cast<double>(n) - half));
    const auto hi = static_cast<SiteIndex>(std::floor(static_cast<double>(n) + half));
    if (lo < T.origin() || lo < 1 || hi + 1 > T.last())
        throw InvalidArgument("decouple: cuts " + std::to_string(lo) + ", " + std::to_string(hi) +
                              " outside the window [" + std::to_string(T.origin()) + ", " +
                              std::to_string(T.last()) + "]");
    const SiteIndex cuts[] = {lo, hi};
    return {T.with_cuts(cuts), lo, hi, n, m, beta};
}

/// P (R_T - R_H) P on window w, from (R_T - R_H) = R_T (H - T) R_H, which only
/// involves the resolvent columns at the cut sites.
inline Eigen::MatrixXcd decoupling_difference(const TruncatedJacobi& T, const DecoupledOperator& H,
                                              cplx z, const ProjectionWindow& w) {
    detail::require(T.origin() == H.op.origin() && T.size() == H.op.size(),
                    "decoupling_difference: operators live on different windows");
    detail::require(T.covers(w.lo, w.hi), "decoupling_difference: window outside the truncation");
    const std::vector<SiteIndex> sites{H.cut_lo, H.cut_lo + 1, H.cut_hi, H.cut_hi + 1};
    const Eigen::MatrixXcd RT = TridiagonalResolvent(T, z).columns(sites);
    const Eigen::MatrixXcd RH = TridiagonalResolvent(H.op, z).columns(sites);
    const auto r0 = T.local(w.lo);
    const auto W = static_cast<Eigen::Index>(w.size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(W, W);
    for (int c = 0; c < 2; ++c) {
        const SiteIndex cut = sites[2 * c];
        const double a = T.entry(cut, cut + 1);
        // (H - T) has -a at (cut, cut+1) and (cut+1, cut); R_H is symmetric.
        out.noalias() -= a * RT.col(2 * c).segment(r0, W) * RH.col(2 * c + 1).segment(r0, W).transpose();
        out.noalias() -= a * RT.col(2 * c + 1).segment(r0, W) * RH.col(2 * c).segment(r0, W).transpose();
    }
    return out;
}

/// P (R_A - R_B) P on window w when B = A + diag(deltas at sites), from
/// R_A - R_B = R_A (B - A) R_B.
inline Eigen::MatrixXcd diagonal_perturbation_difference(
    const TruncatedJacobi& A, const TruncatedJacobi& B, cplx z, const ProjectionWindow& w,
    const std::vector<std::pair<SiteIndex, double>>& sites) {
    detail::require(A.covers(w.lo, w.hi), "diagonal_perturbation_difference: window outside");
    const auto W = static_cast<Eigen::Index>(w.size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(W, W);
    if (sites.empty()) return out;
    std::vector<SiteIndex> idx;
    for (const auto& s : sites) idx.push_back(s.first);
    const Eigen::MatrixXcd RA = TridiagonalResolvent(A, z).columns(idx);
    const Eigen::MatrixXcd RB = TridiagonalResolvent(B, z).columns(idx);
    const auto r0 = A.local(w.lo);
    for (std::size_t s = 0; s < sites.size(); ++s) {
        const auto c = static_cast<Eigen::Index>(s);
        out.noalias() += sites[s].second * RA.col(c).segment(r0, W) * RB.col(c).segment(r0, W).transpose();
    }
    return out;
}

/// 4 m^2 n^{2 beta} n^{2 gamma} D exp(-2 d m (n^beta - n^beta') / n^gamma).
inline double decoupling_lemma_bound(SiteIndex n, int m, double beta, double beta_prime,
                                     double gamma, double D, double d) {
    const auto x = static_cast<double>(n);
    return 4.0 * m * m * std::pow(x, 2.0 * beta) * std::pow(x, 2.0 * gamma) * D *
           std::exp(-2.0 * d * m * (std::pow(x, beta) - std::pow(x, beta_prime)) / std::pow(x, gamma));
}

/// R0 - R for R = (H0 + lambda e_r e_r^T - z)^{-1}, with R0 = (H0 - z)^{-1} given on
/// a window containing r: entries lambda R0_{j,r} R0_{r,l} / (1 + lambda R0_{r,r}).
inline WindowedMatrix rank_one_resolvent_diff(const WindowedMatrix& R0, SiteIndex r, double lambda) {
    detail::require(R0.row_origin == R0.col_origin && R0.values.rows() == R0.values.cols(),
                    "rank_one_resolvent_diff: square window expected");
    const auto lr = r - R0.row_origin;
    detail::require(lr >= 0 && lr < R0.values.rows(), "rank_one_resolvent_diff: r outside the window");
    const cplx denom = 1.0 + lambda * R0.values(lr, lr);
    if (std::abs(denom) < 1e-10)
        throw NumericalError("rank_one_resolvent_diff: resonance, |1 + lambda R0_rr| < 1e-10");
    Eigen::MatrixXcd out = (lambda / denom) * R0.values.col(lr) * R0.values.row(lr);
    return {R0.row_origin, R0.col_origin, std::move(out)};
}

struct ComparisonMatrices {
    WindowedMatrix G;
    WindowedMatrix T;
    WindowedMatrix R;
    cplx amplitude;  // A(z_n, lambda)
    SiteIndex r;
    double lambda;
};

/// A(z, lambda) = (phi - 1/phi)^{-2} / (1 + lambda (1 - phi^{2r}) / (phi - 1/phi)).
inline cplx comparison_amplitude(cplx z, SiteIndex r, double lambda) {
    const cplx p = phi(z);
    const cplx w = p - 1.0 / p;
    const cplx denom = 1.0 + lambda * (1.0 - ipow(p, 2 * r)) / w;
    if (std::abs(denom) < 1e-10) throw NumericalError("comparison_amplitude: resonance");
    return 1.0 / (w * w) / denom;
}

/// G from the closed-form free resolvent via the rank-one formula, T = A phi^{|r-j|+|r-l|}
/// and R = G - lambda T, all on the window [n - 2 m n^beta', n + 2 m n^beta'].
///
/// R is evaluated from its expanded closed form
///   lambda A (phi^{r+j} phi^{r+l} - phi^{|r-j|} phi^{r+l} - phi^{r+j} phi^{|r-l|}),
/// which is exact even where G - lambda T would cancel to roundoff.
inline ComparisonMatrices build_comparison_matrices(SiteIndex n, int m, double beta_prime,
                                                    const SpectralShift& shift, SiteIndex r,
                                                    double lambda) {
    detail::require(r >= 1, "build_comparison_matrices: r must be >= 1");
    const auto w = comparison_window(n, m, beta_prime);
    const cplx z = shift.z();
    const cplx p = phi(z);
    const cplx R0rr = free_resolvent_entry(r, r, z);
    const cplx denom = 1.0 + lambda * R0rr;
    if (std::abs(denom) < 1e-10)
        throw NumericalError("build_comparison_matrices: resonance, |1 + lambda R0_rr| < 1e-10");
    const auto W = static_cast<Eigen::Index>(w.size());
    Eigen::VectorXcd col(W), pw(W);
    for (Eigen::Index i = 0; i < W; ++i) {
        const SiteIndex j = w.lo + i;
        col(i) = free_resolvent_entry(j, r, z);
        pw(i) = ipow(p, std::abs(r - j));
    }
    const cplx A = comparison_amplitude(z, r, lambda);
    Eigen::MatrixXcd G = (lambda / denom) * col * col.transpose();
    Eigen::VectorXcd far(W);
    for (Eigen::Index i = 0; i < W; ++i) far(i) = ipow(p, r + w.lo + i);
    Eigen::MatrixXcd T(W, W), R(W, W);
    for (Eigen::Index l = 0; l < W; ++l)
        for (Eigen::Index j = 0; j < W; ++j) {
            T(j, l) = A * ipow(p, std::abs(r - (w.lo + j)) + std::abs(r - (w.lo + l)));
            R(j, l) = lambda * A * (far(j) * far(l) - pw(j) * far(l) - far(j) * pw(l));
        }
    return {{w.lo, w.lo, std::move(G)}, {w.lo, w.lo, std::move(T)}, {w.lo, w.lo, std::move(R)}, A, r,
            lambda};
}

namespace detail {

// W x K: Hankel coordinate i -> absolute index r + i (zero rows outside the window).
inline Eigen::MatrixXcd shift_embedding(const ProjectionWindow& w, SiteIndex r, Eigen::Index K) {
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(w.size(), K);
    for (Eigen::Index i = 0; i < K; ++i)
        if (w.contains(r + i)) S(r + i - w.lo, i) = 1.0;
    return S;
}

// W x K: Hankel coordinate i -> absolute index r - i.
inline Eigen::MatrixXcd flip_embedding(const ProjectionWindow& w, SiteIndex r, Eigen::Index K) {
    Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(w.size(), K);
    for (Eigen::Index i = 0; i < K; ++i)
        if (r - i >= 1 && w.contains(r - i)) E(r - i - w.lo, i) = 1.0;
    return E;
}

// K x K: removes coordinate 0.
inline Eigen::MatrixXcd corner_deletion(Eigen::Index K) {
    Eigen::MatrixXcd Q = Eigen::MatrixXcd::Identity(K, K);
    Q(0, 0) = 0.0;
    return Q;
}

}  // namespace detail

/// T assembled from the Hankel matrix (q^{a+b}) through the four blocks
/// shift/shift, flip/shift, shift/flip and flip/flip, the flipped sides with the
/// corner coordinate deleted so that the (r, r) entry is counted once.
inline WindowedMatrix assemble_T_from_hankel(SiteIndex n, int m, double beta_prime,
                                             const SpectralShift& shift, SiteIndex r, double lambda) {
    detail::require(r >= 1, "assemble_T_from_hankel: r must be >= 1");
    const auto w = comparison_window(n, m, beta_prime);
    const cplx q = phi(shift.z());
    const auto K = static_cast<Eigen::Index>(std::max(std::abs(w.hi - r), std::abs(r - w.lo)) + 1);
    Eigen::MatrixXcd H(K, K);
    for (Eigen::Index b = 0; b < K; ++b)
        for (Eigen::Index a = 0; a < K; ++a) H(a, b) = ipow(q, a + b);
    const Eigen::MatrixXcd S = detail::shift_embedding(w, r, K);
    const Eigen::MatrixXcd EQ = detail::flip_embedding(w, r, K) * detail::corner_deletion(K);
    const cplx A = comparison_amplitude(shift.z(), r, lambda);
    Eigen::MatrixXcd T = S * H * S.transpose() + EQ * H * S.transpose() + S * H * EQ.transpose() +
                         EQ * H * EQ.transpose();
    T *= A;
    return {w.lo, w.lo, std::move(T)};
}

}  // namespace mesofluct
