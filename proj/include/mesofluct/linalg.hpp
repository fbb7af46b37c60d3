#pragma once

// Thin wrappers over the LAPACK routines the library depends on. Everything
// else is expressed with Eigen.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "mesofluct/error.hpp"

namespace mesofluct {

using cplx = std::complex<double>;

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
struct TridiagonalEigen {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // column k is the eigenvector of values[k]
};

/// Divide-and-conquer eigensolver (LAPACK dstevd) for the matrix with the
/// given diagonal and off-diagonal.
inline TridiagonalEigen tridiagonal_eigen(std::span<const double> diag,
                                          std::span<const double> offdiag,
                                          bool want_vectors = true) {
    const auto n = static_cast<lapack_int>(diag.size());
    detail::require(n >= 1, "tridiagonal_eigen: empty matrix");
    detail::require(offdiag.size() + 1 == diag.size(),
                    "tridiagonal_eigen: off-diagonal must have size N-1");

    TridiagonalEigen out;
    out.values = Eigen::Map<const Eigen::VectorXd>(diag.data(), n);
    std::vector<double> e(offdiag.begin(), offdiag.end());
    e.push_back(0.0);
    if (want_vectors) out.vectors.resize(n, n);

    const lapack_int info =
        LAPACKE_dstevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', n, out.values.data(),
                       e.data(), want_vectors ? out.vectors.data() : nullptr, want_vectors ? n : 1);
    if (info != 0)
        throw NumericalError("dstevd failed with info = " + std::to_string(info));
    return out;
}

/// LU factorisation (partial pivoting) of a complex tridiagonal matrix with
/// LAPACK's zgttrf. Solves are O(N) per right-hand side.
class ComplexTridiagonalLU {
public:
    ComplexTridiagonalLU(std::vector<cplx> lower, std::vector<cplx> diag, std::vector<cplx> upper)
        : dl_(std::move(lower)), d_(std::move(diag)), du_(std::move(upper)) {
        const auto n = d_.size();
        detail::require(n >= 1, "ComplexTridiagonalLU: empty matrix");
        detail::require(dl_.size() + 1 == n && du_.size() + 1 == n,
                        "ComplexTridiagonalLU: band sizes must be N-1");
        anorm_ = one_norm();
        du2_.assign(n > 2 ? n - 2 : 1, cplx{});
        ipiv_.assign(n, 0);
        const lapack_int info =
            LAPACKE_zgttrf(static_cast<lapack_int>(n), lapack(dl_), lapack(d_), lapack(du_),
                           lapack(du2_), ipiv_.data());
        if (info > 0)
            throw NumericalError("zgttrf: exactly singular tridiagonal matrix (pivot " +
                                 std::to_string(info) + ")");
        if (info < 0) throw NumericalError("zgttrf: invalid argument " + std::to_string(-info));
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(d_.size()); }

    /// Overwrites the columns of `rhs` with the solution of A X = rhs.
    void solve_in_place(Eigen::MatrixXcd& rhs) const {
        detail::require(rhs.rows() == size(), "ComplexTridiagonalLU: rhs row mismatch");
        if (rhs.cols() == 0) return;
        // zgttrs does not modify the factors, the const_cast only satisfies the C signature.
        auto* dl = const_cast<cplx*>(dl_.data());
        auto* d = const_cast<cplx*>(d_.data());
        auto* du = const_cast<cplx*>(du_.data());
        auto* du2 = const_cast<cplx*>(du2_.data());
        const lapack_int info = LAPACKE_zgttrs(
            LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(size()),
            static_cast<lapack_int>(rhs.cols()), reinterpret_cast<lapack_complex_double*>(dl),
            reinterpret_cast<lapack_complex_double*>(d), reinterpret_cast<lapack_complex_double*>(du),
            reinterpret_cast<lapack_complex_double*>(du2), ipiv_.data(),
            reinterpret_cast<lapack_complex_double*>(rhs.data()),
            static_cast<lapack_int>(rhs.rows()));
        if (info != 0) throw NumericalError("zgttrs failed with info = " + std::to_string(info));
    }

    /// Solution of A x = e_k (0-based k).
    Eigen::VectorXcd unit_solve(Eigen::Index k) const {
        Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(size(), 1);
        x(k, 0) = 1.0;
        solve_in_place(x);
        return x.col(0);
    }

    /// 1-norm condition number estimate (zgtcon).
    double condition_estimate() const {
        double rcond = 0.0;
        auto* dl = const_cast<cplx*>(dl_.data());
        auto* d = const_cast<cplx*>(d_.data());
        auto* du = const_cast<cplx*>(du_.data());
        auto* du2 = const_cast<cplx*>(du2_.data());
        const lapack_int info = LAPACKE_zgtcon(
            '1', static_cast<lapack_int>(size()), reinterpret_cast<lapack_complex_double*>(dl),
            reinterpret_cast<lapack_complex_double*>(d), reinterpret_cast<lapack_complex_double*>(du),
            reinterpret_cast<lapack_complex_double*>(du2), ipiv_.data(), anorm_, &rcond);
        if (info != 0) throw NumericalError("zgtcon failed with info = " + std::to_string(info));
        return rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    }

private:
    static lapack_complex_double* lapack(std::vector<cplx>& v) {
        return reinterpret_cast<lapack_complex_double*>(v.data());
    }

    double one_norm() const {
        const auto n = d_.size();
        double best = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double col = std::abs(d_[j]);
            if (j > 0) col += std::abs(du_[j - 1]);
            if (j + 1 < n) col += std::abs(dl_[j]);
            best = std::max(best, col);
        }
        return best;
    }

    std::vector<cplx> dl_, d_, du_, du2_;
    std::vector<lapack_int> ipiv_;
    double anorm_ = 0.0;
};

/// Schatten-1 norm: the sum of singular values (LAPACK zgesdd, values only).
inline double trace_norm(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::MatrixXcd a = m;
    const auto rows = static_cast<lapack_int>(a.rows());
    const auto cols = static_cast<lapack_int>(a.cols());
    std::vector<double> s(static_cast<std::size_t>(std::min(rows, cols)));
    const lapack_int info = LAPACKE_zgesdd(
        LAPACK_COL_MAJOR, 'N', rows, cols, reinterpret_cast<lapack_complex_double*>(a.data()), rows,
        s.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw NumericalError("zgesdd failed with info = " + std::to_string(info));
    double total = 0.0;
    for (double v : s) total += v;
    return total;
}

/// Singular values, descending.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return {};
    Eigen::MatrixXcd a = m;
    const auto rows = static_cast<lapack_int>(a.rows());
    const auto cols = static_cast<lapack_int>(a.cols());
    Eigen::VectorXd s(std::min(rows, cols));
    const lapack_int info = LAPACKE_zgesdd(
        LAPACK_COL_MAJOR, 'N', rows, cols, reinterpret_cast<lapack_complex_double*>(a.data()), rows,
        s.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw NumericalError("zgesdd failed with info = " + std::to_string(info));
    return s;
}

}  // namespace mesofluct
