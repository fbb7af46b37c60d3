#pragma once

// Orthonormal polynomials, the Christoffel-Darboux kernel, and exact sampling
// of the orthogonal polynomial ensemble OPE_n(mu) as a projection DPP.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <nlohmann/json.hpp>

#include "mesofluct/error.hpp"
#include "mesofluct/jacobi.hpp"
#include "mesofluct/test_function.hpp"

namespace mesofluct {

/// a_1..a_n and b_1..b_n of an operator, stored 0-based.
struct RecurrenceTable {
    std::vector<double> a;
    std::vector<double> b;

    static RecurrenceTable from(const JacobiOperator& J, SiteIndex n) {
        detail::require(n >= 1, "RecurrenceTable: n must be >= 1");
        RecurrenceTable t;
        t.a.reserve(static_cast<std::size_t>(n));
        t.b.reserve(static_cast<std::size_t>(n));
        for (SiteIndex i = 1; i <= n; ++i) {
            t.a.push_back(J.offdiagonal(i));
            t.b.push_back(J.diagonal(i));
        }
        return t;
    }

    SiteIndex size() const { return static_cast<SiteIndex>(b.size()); }
};

/// p_0(x), ..., p_{n-1}(x) written into out.
inline void eval_polys_into(double x, const RecurrenceTable& t, std::span<double> out) {
    const auto n = out.size();
    detail::require(n >= 1 && n <= t.b.size(), "eval_polys: not enough recurrence coefficients");
    out[0] = 1.0;
    if (n == 1) return;
    out[1] = (x - t.b[0]) / t.a[0];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        out[k + 1] = ((x - t.b[k]) * out[k] - t.a[k - 1] * out[k - 1]) / t.a[k];
        if (!(std::abs(out[k + 1]) <= 1e300))
            throw NumericalError("eval_polys: |p_" + std::to_string(k + 1) + "| exceeds 1e300");
    }
    if (!(std::abs(out[1]) <= 1e300)) throw NumericalError("eval_polys: |p_1| exceeds 1e300");
}

/// x p_k = a_{k+1} p_{k+1} + b_{k+1} p_k + a_k p_{k-1}, p_0 = 1.
inline std::vector<double> eval_polys(double x, SiteIndex n, const JacobiOperator& J) {
    const auto t = RecurrenceTable::from(J, n);
    std::vector<double> out(static_cast<std::size_t>(n));
    eval_polys_into(x, t, out);
    return out;
}

inline double cd_kernel(double x, double y, const RecurrenceTable& t, SiteIndex n) {
    std::vector<double> px(static_cast<std::size_t>(n)), py(static_cast<std::size_t>(n));
    eval_polys_into(x, t, px);
    eval_polys_into(y, t, py);
    double s = 0.0;
    for (std::size_t k = 0; k < px.size(); ++k) s += px[k] * py[k];
    return s;
}

/// K_n(x, y) = sum_{k<n} p_k(x) p_k(y).
inline double cd_kernel(double x, double y, SiteIndex n, const JacobiOperator& J) {
    return cd_kernel(x, y, RecurrenceTable::from(J, n), n);
}

/// K_n(x + a/n, x + b/n) / K_n(x, x).
inline double sine_ratio(double x, double a, double b, SiteIndex n, const JacobiOperator& J) {
    detail::require(n >= 1, "sine_ratio: n must be >= 1");
    const double r = std::max(std::abs(a), std::abs(b)) / static_cast<double>(n);
    detail::require(x - r > -2.0 && x + r < 2.0, "sine_ratio: x +- max(|a|,|b|)/n must lie in (-2,2)");
    const auto t = RecurrenceTable::from(J, n);
    const double d = cd_kernel(x, x, t, n);
    if (!(d >= 1e-300)) throw NumericalError("sine_ratio: K_n(x,x) below 1e-300");
    const double nd = static_cast<double>(n);
    return cd_kernel(x + a / nd, x + b / nd, t, n) / d;
}

/// Absolutely continuous probability measure with its recurrence coefficients.
class MeasureDensity {
public:
    MeasureDensity(std::function<double(double)> density, double lo, double hi, JacobiOperator coeffs,
                   std::string id)
        : density_(std::move(density)), lo_(lo), hi_(hi), coeffs_(std::move(coeffs)), id_(std::move(id)) {
        detail::require(static_cast<bool>(density_), "MeasureDensity: empty density");
        detail::require(std::isfinite(lo_) && std::isfinite(hi_) && lo_ < hi_,
                        "MeasureDensity: support must be a bounded interval");
        total_ = integrate([](double) { return 1.0; });
        detail::require(std::abs(total_ - 1.0) <= 1e-8, "MeasureDensity: density does not integrate to 1");
    }

    /// sqrt(4 - x^2)/(2 pi) on [-2, 2]; a_n = 1, b_n = 0.
    static MeasureDensity semicircle() {
        return MeasureDensity(
            [](double x) { return std::abs(x) < 2.0 ? std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi) : 0.0; },
            -2.0, 2.0, free_jacobi(), "semicircle");
    }

    double operator()(double x) const {
        if (x < lo_ || x > hi_) return 0.0;
        return std::max(0.0, density_(x));
    }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const JacobiOperator& coefficients() const { return coeffs_; }
    const std::string& id() const { return id_; }
    double normalization() const { return total_; }

    /// int_lo^hi g dmu (tanh-sinh, robust to endpoint singularities).
    template <class G>
    double integrate(G&& g, double lo, double hi) const {
        boost::math::quadrature::tanh_sinh<double> rule;
        lo = std::max(lo, lo_);
        hi = std::min(hi, hi_);
        if (lo >= hi) return 0.0;
        return rule.integrate([&](double x) { return g(x) * (*this)(x); }, lo, hi, 1e-13);
    }

    template <class G>
    double integrate(G&& g) const {
        return integrate(std::forward<G>(g), lo_, hi_);
    }

private:
    std::function<double(double)> density_;
    double lo_, hi_;
    JacobiOperator coeffs_;
    std::string id_;
    double total_ = 0.0;
};

/// Per-sample stream: mt19937_64 seeded from (master seed, sample id).
class SampleStream {
public:
    SampleStream(std::uint64_t master, std::uint64_t sample_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                          static_cast<std::uint32_t>(sample_id), static_cast<std::uint32_t>(sample_id >> 32)};
        gen_.seed(seq);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

struct SampleBatch {
    SiteIndex n;
    std::int64_t num_samples;
    Eigen::MatrixXd points;  // num_samples x n, each row sorted ascending
    std::uint64_t master_seed;
    std::vector<std::uint64_t> seeds;  // per-sample stream ids
    std::string measure_id;
};

struct SamplerOptions {
    int cells = 2048;
    int points_per_cell = 8;
    double envelope_factor = 1.2;
    int batch = 32;
    std::int64_t max_trials = 1'000'000;
};

namespace detail {

/// Sequential conditional sampling for a batch of independent configurations.
/// Grid residuals r_g = K(x_g,x_g) - sum_j (e_j . phi(x_g))^2 are updated for the
/// whole batch with one matrix product per step.
class BatchSampler {
public:
    BatchSampler(const MeasureDensity& mu, SiteIndex n, const SamplerOptions& opt)
        : mu_(mu), n_(n), opt_(opt), table_(RecurrenceTable::from(mu.coefficients(), n)) {
        detail::require(n >= 1, "sample_ope: n must be >= 1");
        detail::require(opt.cells >= 1 && opt.points_per_cell >= 1, "sample_ope: bad envelope grid");
        const Eigen::Index G = static_cast<Eigen::Index>(opt.cells) * opt.points_per_cell + 1;
        width_ = (mu.hi() - mu.lo()) / opt.cells;
        grid_.resize(G);
        weight_.resize(G);
        phi_.resize(G, n);
        std::vector<double> p(static_cast<std::size_t>(n));
        for (Eigen::Index g = 0; g < G; ++g) {
            grid_[g] = g + 1 == G ? mu.hi() : mu.lo() + width_ * static_cast<double>(g) / opt.points_per_cell;
            weight_[g] = mu(grid_[g]);
            eval_polys_into(grid_[g], table_, p);
            for (SiteIndex k = 0; k < n; ++k) phi_(g, k) = p[static_cast<std::size_t>(k)];
        }
        diag_ = phi_.rowwise().squaredNorm();
    }

    /// Rows of out (one per stream) are filled with sampled configurations.
    void run(std::span<SampleStream> streams, Eigen::Ref<Eigen::MatrixXd> out) const {
        const auto B = static_cast<Eigen::Index>(streams.size());
        Eigen::MatrixXd resid = diag_.replicate(1, B);
        std::vector<Eigen::MatrixXd> basis(static_cast<std::size_t>(B), Eigen::MatrixXd(n_, n_));
        Eigen::MatrixXd fresh(n_, B);
        std::vector<double> cum(static_cast<std::size_t>(opt_.cells));
        Eigen::VectorXd px(n_);

        for (SiteIndex i = 0; i < n_; ++i) {
            for (Eigen::Index s = 0; s < B; ++s) {
                auto& E = basis[static_cast<std::size_t>(s)];
                // Envelope over cells from the grid residual of this sample.
                const Eigen::VectorXd target_g = resid.col(s).cwiseMax(0.0).cwiseProduct(weight_);
                const Eigen::Map<const Eigen::MatrixXd> cells(target_g.data(), opt_.points_per_cell, opt_.cells);
                Eigen::RowVectorXd h = cells.colwise().maxCoeff();
                const Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<>> right(
                    target_g.data() + opt_.points_per_cell, opt_.cells, Eigen::InnerStride<>(opt_.points_per_cell));
                h = h.cwiseMax(right.transpose());
                double total = 0.0;
                for (int c = 0; c < opt_.cells; ++c) {
                    total += opt_.envelope_factor * h[c] * width_;
                    cum[static_cast<std::size_t>(c)] = total;
                }
                if (!(total > 0.0)) throw NumericalError("sample_ope: empty envelope");

                double x = 0.0, r = 0.0;
                for (std::int64_t trial = 0;; ++trial) {
                    if (trial == opt_.max_trials) throw NumericalError("sample_ope: rejection sampler stalled");
                    const double u = streams[static_cast<std::size_t>(s)].uniform() * total;
                    const auto c = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
                    const int cell = std::min(c, opt_.cells - 1);
                    const double lo_cum = cell ? cum[static_cast<std::size_t>(cell - 1)] : 0.0;
                    const double height = (cum[static_cast<std::size_t>(cell)] - lo_cum) / width_;
                    x = mu_.lo() + width_ * (cell + streams[static_cast<std::size_t>(s)].uniform());
                    eval_polys_into(x, table_, std::span<double>(px.data(), static_cast<std::size_t>(n_)));
                    r = px.squaredNorm();
                    if (i > 0) r -= (E.leftCols(i).transpose() * px).squaredNorm();
                    r = std::max(r, 0.0);
                    const double target = r * mu_(x);
                    if (target > height)
                        throw NumericalError("sample_ope: envelope violation (acceptance ratio > 1) at x = " +
                                             std::to_string(x));
                    if (streams[static_cast<std::size_t>(s)].uniform() * height < target) break;
                }
                out(s, i) = x;

                // New orthonormal direction: phi(x) minus its projection, twice.
                Eigen::VectorXd v = px;
                for (int pass = 0; pass < 2 && i > 0; ++pass)
                    v -= E.leftCols(i) * (E.leftCols(i).transpose() * v);
                const double nv = v.norm();
                if (!(nv > 0.0)) throw NumericalError("sample_ope: degenerate conditional direction");
                E.col(i) = v / nv;
                fresh.col(s) = E.col(i);
            }
            if (i + 1 < n_) {
                const Eigen::MatrixXd proj = phi_ * fresh;
                resid -= proj.cwiseAbs2();
            }
        }
    }

private:
    const MeasureDensity& mu_;
    SiteIndex n_;
    SamplerOptions opt_;
    RecurrenceTable table_;
    double width_ = 0.0;
    Eigen::VectorXd grid_, weight_, diag_;
    Eigen::MatrixXd phi_;
};

}  // namespace detail

/// num_samples independent configurations of OPE_n(mu). Sample k uses the stream
/// (seed, k), so results do not depend on how samples are grouped or scheduled.
inline SampleBatch sample_ope_batch(const MeasureDensity& mu, SiteIndex n, std::int64_t num_samples,
                                    std::uint64_t seed, const SamplerOptions& opt = {}) {
    detail::require(num_samples >= 1, "sample_ope_batch: num_samples must be >= 1");
    detail::BatchSampler sampler(mu, n, opt);
    SampleBatch batch{n, num_samples, Eigen::MatrixXd(num_samples, n), seed, {}, mu.id()};
    const std::int64_t step = std::max(1, opt.batch);
    for (std::int64_t first = 0; first < num_samples; first += step) {
        const std::int64_t count = std::min(step, num_samples - first);
        std::vector<SampleStream> streams;
        for (std::int64_t k = 0; k < count; ++k) {
            streams.emplace_back(seed, static_cast<std::uint64_t>(first + k));
            batch.seeds.push_back(static_cast<std::uint64_t>(first + k));
        }
        sampler.run(streams, batch.points.middleRows(first, count));
    }
    for (std::int64_t k = 0; k < num_samples; ++k) {
        auto row = batch.points.row(k);
        std::sort(row.begin(), row.end());
    }
    return batch;
}

/// One configuration (sample id 0 of the stream family for seed).
inline std::vector<double> sample_ope(const MeasureDensity& mu, SiteIndex n, std::uint64_t seed,
                                      const SamplerOptions& opt = {}) {
    const auto b = sample_ope_batch(mu, n, 1, seed, opt);
    return {b.points.row(0).begin(), b.points.row(0).end()};
}

/// sum_k f(n^gamma (x_k - x0)) with n the number of points.
inline double linear_statistic(std::span<const double> points, const TestFunction& f, double gamma, double x0) {
    const double s = std::pow(static_cast<double>(points.size()), gamma);
    double acc = 0.0;
    for (double x : points) acc += f(s * (x - x0));
    return acc;
}

inline std::vector<double> linear_statistics(const SampleBatch& b, const TestFunction& f, double gamma,
                                             double x0) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(b.num_samples));
    for (std::int64_t k = 0; k < b.num_samples; ++k) {
        const Eigen::VectorXd row = b.points.row(k).transpose();
        out.push_back(linear_statistic(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                       f, gamma, x0));
    }
    return out;
}

struct CumulantEstimate {
    double value;
    double stderr_;
};

namespace detail {

/// Unbiased k-statistics k_1..k_4 from power sums s_1..s_4 of N values.
inline std::array<double, 4> k_statistics(double N, double s1, double s2, double s3, double s4) {
    const double k1 = s1 / N;
    const double k2 = (N * s2 - s1 * s1) / (N * (N - 1));
    const double k3 = (2 * s1 * s1 * s1 - 3 * N * s1 * s2 + N * N * s3) / (N * (N - 1) * (N - 2));
    const double k4 = (-6 * std::pow(s1, 4) + 12 * N * s1 * s1 * s2 - 3 * N * (N - 1) * s2 * s2 -
                       4 * N * (N + 1) * s1 * s3 + N * N * (N + 1) * s4) /
                      (N * (N - 1) * (N - 2) * (N - 3));
    return {k1, k2, k3, k4};
}

}  // namespace detail

/// k-statistics of orders 1..m_max (standard convention, kappa_m) with
/// leave-one-out jackknife standard errors.
inline std::vector<CumulantEstimate> mc_cumulants(std::span<const double> values, int m_max) {
    if (values.size() < 100) throw InvalidArgument("mc_cumulants: need at least 100 values");
    detail::require(m_max >= 1 && m_max <= 4, "mc_cumulants: m_max must lie in 1..4");
    const auto N = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= N;

    std::array<double, 5> S{};
    for (double v : values) {
        const double c = v - mean;
        double p = 1.0;
        for (int r = 1; r <= 4; ++r) S[static_cast<std::size_t>(r)] += (p *= c);
    }
    auto full = detail::k_statistics(N, S[1], S[2], S[3], S[4]);
    full[0] += mean;

    std::array<double, 4> jm{}, jss{};
    std::vector<std::array<double, 4>> loo;
    loo.reserve(values.size());
    for (double v : values) {
        const double c = v - mean;
        auto k = detail::k_statistics(N - 1, S[1] - c, S[2] - c * c, S[3] - c * c * c, S[4] - c * c * c * c);
        k[0] += mean;
        loo.push_back(k);
        for (std::size_t r = 0; r < 4; ++r) jm[r] += k[r];
    }
    for (auto& m : jm) m /= N;
    for (const auto& k : loo)
        for (std::size_t r = 0; r < 4; ++r) jss[r] += (k[r] - jm[r]) * (k[r] - jm[r]);

    std::vector<CumulantEstimate> out;
    for (int r = 0; r < m_max; ++r) {
        const auto i = static_cast<std::size_t>(r);
        out.push_back({full[i], std::sqrt((N - 1) / N * jss[i])});
    }
    return out;
}

/// CSV rows (sample_id, point_index, value) with 17 significant digits.
inline void write_sample_batch_csv(std::ostream& os, const SampleBatch& b) {
    const auto old = os.precision(17);
    os << "sample_id,point_index,value\n";
    for (std::int64_t k = 0; k < b.num_samples; ++k)
        for (SiteIndex i = 0; i < b.n; ++i) os << k << ',' << i << ',' << b.points(k, i) << '\n';
    os.precision(old);
}

inline nlohmann::json sample_batch_metadata(const SampleBatch& b) {
    return {{"seed", b.master_seed}, {"n", b.n}, {"num_samples", b.num_samples}, {"measure", b.measure_id}};
}

}  // namespace mesofluct
