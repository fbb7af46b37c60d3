#pragma once

// Jacobi operators on l^2(N) with 1-based indexing: the free matrix J0,
// constant-coefficient variants and sparse diagonal perturbations J = J0 + V.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mesofluct/error.hpp"

namespace mesofluct {

using SiteIndex = std::int64_t;

/// Off-diagonal (a_n > 0) and diagonal (b_n) recurrence sequences, evaluable
/// on demand, with a declared bound on |a_n| and |b_n|.
class RecurrenceCoefficients {
public:
    using Sequence = std::function<double(SiteIndex)>;

    RecurrenceCoefficients(Sequence a, Sequence b, double bound, std::string id = "custom")
        : a_(std::make_shared<const Sequence>(std::move(a))),
          b_(std::make_shared<const Sequence>(std::move(b))),
          bound_(bound),
          id_(std::move(id)) {
        detail::require(*a_ && *b_, "RecurrenceCoefficients: empty sequence");
        detail::require(std::isfinite(bound) && bound > 0.0,
                        "RecurrenceCoefficients: bound must be positive and finite");
    }

    static RecurrenceCoefficients constant(double a, double b) {
        detail::require(a > 0.0, "constant coefficients need a > 0");
        detail::require(std::isfinite(a) && std::isfinite(b), "constant coefficients must be finite");
        std::ostringstream id;
        id.precision(17);
        id << "constant(" << a << "," << b << ")";
        return {[a](SiteIndex) { return a; }, [b](SiteIndex) { return b; },
                std::max(std::abs(a), std::abs(b)), id.str()};
    }

    double a(SiteIndex n) const {
        check_index(n);
        const double v = (*a_)(n);
        if (!(v > 0.0) || v > bound_)
            throw NumericalError("a_" + std::to_string(n) + " = " + std::to_string(v) +
                                 " violates 0 < a_n <= bound");
        return v;
    }

    double b(SiteIndex n) const {
        check_index(n);
        const double v = (*b_)(n);
        if (!(std::abs(v) <= bound_))
            throw NumericalError("b_" + std::to_string(n) + " = " + std::to_string(v) +
                                 " exceeds the declared bound");
        return v;
    }

    double bound() const { return bound_; }
    const std::string& id() const { return id_; }

private:
    static void check_index(SiteIndex n) {
        detail::require(n >= 1, "recurrence coefficients are indexed from 1");
    }

    std::shared_ptr<const Sequence> a_, b_;
    double bound_;
    std::string id_;
};

/// Outcome of a finite-horizon spacing check.
struct SpacingReport {
    bool spaced = true;
    std::optional<SiteIndex> first_violation;
    explicit operator bool() const { return spaced; }
};

namespace detail {

inline double spacing_width(double n, double beta, double M) { return M * std::pow(n, beta); }

// Smallest n >= 1 with n + M n^beta >= t (the left side is increasing).
inline SiteIndex first_reaching(SiteIndex t, double beta, double M) {
    SiteIndex lo = 1, hi = std::max<SiteIndex>(t, 1);
    while (lo < hi) {
        const SiteIndex mid = lo + (hi - lo) / 2;
        const auto x = static_cast<double>(mid);
        if (x + spacing_width(x, beta, M) >= static_cast<double>(t))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

// Largest n >= 1 with n - M n^beta <= s. g(n) = n - M n^beta decreases up to
// n* = (M beta)^{1/(1-beta)} and increases afterwards; g(1) = 1 - M.
inline std::optional<SiteIndex> last_below(SiteIndex s, double beta, double M) {
    auto g = [&](SiteIndex n) {
        const auto x = static_cast<double>(n);
        return x - spacing_width(x, beta, M);
    };
    const double nstar = std::pow(M * beta, 1.0 / (1.0 - beta));
    SiteIndex lo = std::max<SiteIndex>(1, static_cast<SiteIndex>(std::ceil(nstar)));
    if (g(lo) > static_cast<double>(s)) {
        // The increasing branch never drops to s; the decreasing branch might.
        if (g(1) > static_cast<double>(s)) return std::nullopt;
        SiteIndex a = 1, b = lo;
        while (b - a > 1) {
            const SiteIndex mid = a + (b - a) / 2;
            if (g(mid) <= static_cast<double>(s))
                a = mid;
            else
                b = mid;
        }
        return a;
    }
    SiteIndex hi = lo;
    SiteIndex step = 1;
    constexpr SiteIndex cap = std::numeric_limits<SiteIndex>::max() / 4;
    while (g(hi) <= static_cast<double>(s)) {
        lo = hi;
        if (hi > cap) return hi;
        hi += step;
        step *= 2;
    }
    while (hi - lo > 1) {
        const SiteIndex mid = lo + (hi - lo) / 2;
        if (g(mid) <= static_cast<double>(s))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace detail

/// Checks that for every n in [n0, horizon] the window [n - M n^beta, n + M n^beta]
/// contains at most one element of `seq`.
///
/// A window holds two elements iff it holds two consecutive ones, so each
/// consecutive pair contributes an interval of violating n, found by bisection.
inline SpacingReport is_beta_spaced(std::span<const SiteIndex> seq, double beta, double M,
                                    SiteIndex horizon, SiteIndex n0 = 100) {
    detail::require(beta > 0.0 && beta < 1.0, "is_beta_spaced: beta must lie in (0,1)");
    detail::require(M > 0.0, "is_beta_spaced: M must be positive");
    for (std::size_t i = 1; i < seq.size(); ++i)
        detail::require(seq[i - 1] < seq[i], "is_beta_spaced: sequence must be strictly increasing");

    const SiteIndex start = std::max<SiteIndex>(n0, 1);
    std::optional<SiteIndex> first;
    for (std::size_t i = 1; i < seq.size(); ++i) {
        const SiteIndex s = seq[i - 1], t = seq[i];
        const SiteIndex lo = std::max(detail::first_reaching(t, beta, M), start);
        if (first && lo >= *first) continue;
        const auto b = detail::last_below(s, beta, M);
        if (!b) continue;
        const SiteIndex hi = std::min(*b, horizon);
        if (lo <= hi) first = lo;
    }
    return {!first.has_value(), first};
}

/// n_k = floor(k^{1/(1-beta)+eps}) for k = 1..count with duplicates removed.
inline std::vector<SiteIndex> beta_spaced_sequence(double beta, double eps, SiteIndex count) {
    detail::require(beta > 0.0 && beta < 1.0, "beta_spaced_sequence: beta must lie in (0,1)");
    detail::require(eps > 0.0, "beta_spaced_sequence: eps must be positive");
    detail::require(count >= 1, "beta_spaced_sequence: count must be >= 1");
    const long double p = 1.0L / (1.0L - static_cast<long double>(beta)) + eps;
    constexpr auto limit = static_cast<long double>(std::numeric_limits<SiteIndex>::max());
    std::vector<SiteIndex> out;
    out.reserve(static_cast<std::size_t>(count));
    for (SiteIndex k = 1; k <= count; ++k) {
        const long double v = std::floor(std::pow(static_cast<long double>(k), p));
        if (!(v < limit))
            throw IndexOverflow("beta_spaced_sequence: k = " + std::to_string(k) +
                                " overflows the index type");
        const auto nk = static_cast<SiteIndex>(v);
        if (out.empty() || nk > out.back()) out.push_back(nk);
    }
    return out;
}

/// Finite-horizon spacing parameters enforced when a SparsePerturbation is built.
struct SpacingCheck {
    double M = 1.0;
    SiteIndex n0 = 100;
    SiteIndex horizon = 1'000'000;
};

/// Diagonal perturbation V = sum_k lambda_k e_{n_k} e_{n_k}^T.
class SparsePerturbation {
public:
    /// `decay_tag` documents how lambda_k -> 0 (e.g. "1/log(k+1)"); |lambda_k|
    /// must be non-increasing from the 1-based index `monotone_from` on.
    SparsePerturbation(std::vector<SiteIndex> positions, std::vector<double> values, double beta,
                       std::string decay_tag, std::size_t monotone_from = 1,
                       std::optional<SpacingCheck> spacing = SpacingCheck{})
        : positions_(std::move(positions)),
          values_(std::move(values)),
          beta_(beta),
          decay_tag_(std::move(decay_tag)) {
        detail::require(positions_.size() == values_.size(),
                        "SparsePerturbation: positions and values differ in length");
        detail::require(beta_ > 0.0 && beta_ < 1.0, "SparsePerturbation: beta must lie in (0,1)");
        detail::require(!decay_tag_.empty(), "SparsePerturbation: a decay tag is required");
        detail::require(monotone_from >= 1, "SparsePerturbation: monotone_from is 1-based");
        for (std::size_t i = 0; i < positions_.size(); ++i) {
            detail::require(positions_[i] >= 1, "SparsePerturbation: positions start at 1");
            detail::require(std::isfinite(values_[i]), "SparsePerturbation: non-finite value");
            if (i > 0)
                detail::require(positions_[i - 1] < positions_[i],
                                "SparsePerturbation: positions must be strictly increasing");
            if (i >= monotone_from && i > 0)
                detail::require(std::abs(values_[i]) <= std::abs(values_[i - 1]),
                                "SparsePerturbation: |lambda_k| increases at k = " +
                                    std::to_string(i + 1));
        }
        if (spacing && positions_.size() > 1) {
            const SiteIndex horizon = std::min(spacing->horizon, positions_.back());
            const auto report = is_beta_spaced(positions_, beta_, spacing->M, horizon, spacing->n0);
            if (!report)
                throw InvalidArgument("SparsePerturbation: positions are not beta-spaced (first "
                                      "violation at n = " +
                                      std::to_string(*report.first_violation) + ")");
        }
    }

    const std::vector<SiteIndex>& positions() const { return positions_; }
    const std::vector<double>& values() const { return values_; }
    double beta() const { return beta_; }
    const std::string& decay_tag() const { return decay_tag_; }
    std::size_t size() const { return positions_.size(); }

    /// lambda at site i, or nullopt if i is not a perturbation site.
    std::optional<double> at(SiteIndex i) const {
        const auto it = std::lower_bound(positions_.begin(), positions_.end(), i);
        if (it == positions_.end() || *it != i) return std::nullopt;
        return values_[static_cast<std::size_t>(it - positions_.begin())];
    }

    /// (site, lambda) pairs with lo <= site <= hi.
    std::vector<std::pair<SiteIndex, double>> sites_in(SiteIndex lo, SiteIndex hi) const {
        std::vector<std::pair<SiteIndex, double>> out;
        auto it = std::lower_bound(positions_.begin(), positions_.end(), lo);
        for (; it != positions_.end() && *it <= hi; ++it)
            out.emplace_back(*it, values_[static_cast<std::size_t>(it - positions_.begin())]);
        return out;
    }

private:
    std::vector<SiteIndex> positions_;
    std::vector<double> values_;
    double beta_;
    std::string decay_tag_;
};

/// Finite section of a Jacobi operator on the absolute indices [origin, origin + size - 1].
class TruncatedJacobi {
public:
    TruncatedJacobi(SiteIndex origin, std::vector<double> diag, std::vector<double> offdiag)
        : origin_(origin), diag_(std::move(diag)), offdiag_(std::move(offdiag)) {
        detail::require(origin_ >= 1, "TruncatedJacobi: origin must be >= 1");
        detail::require(!diag_.empty(), "TruncatedJacobi: empty window");
        detail::require(offdiag_.size() + 1 == diag_.size(),
                        "TruncatedJacobi: off-diagonal must have size N-1");
    }

    SiteIndex origin() const { return origin_; }
    SiteIndex last() const { return origin_ + size() - 1; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(diag_.size()); }
    std::span<const double> diag() const { return diag_; }
    std::span<const double> offdiag() const { return offdiag_; }
    bool covers(SiteIndex lo, SiteIndex hi) const { return lo >= origin_ && hi <= last(); }

    /// 0-based local position of the absolute index i.
    Eigen::Index local(SiteIndex i) const {
        detail::require(i >= origin_ && i <= last(), "TruncatedJacobi: index " + std::to_string(i) +
                                                         " outside the window");
        return static_cast<Eigen::Index>(i - origin_);
    }

    /// Entry (i, j) in absolute indices.
    double entry(SiteIndex i, SiteIndex j) const {
        const auto li = local(i), lj = local(j);
        if (li == lj) return diag_[static_cast<std::size_t>(li)];
        if (li + 1 == lj) return offdiag_[static_cast<std::size_t>(li)];
        if (lj + 1 == li) return offdiag_[static_cast<std::size_t>(lj)];
        return 0.0;
    }

    TruncatedJacobi window(SiteIndex lo, SiteIndex hi) const {
        detail::require(lo <= hi && covers(lo, hi), "TruncatedJacobi::window: outside the window");
        const auto a = static_cast<std::size_t>(lo - origin_);
        const auto b = static_cast<std::size_t>(hi - origin_);
        return {lo, std::vector<double>(diag_.begin() + a, diag_.begin() + b + 1),
                std::vector<double>(offdiag_.begin() + a, offdiag_.begin() + b)};
    }

    /// Copy with entry (i, i) increased by delta.
    TruncatedJacobi with_diagonal_shift(SiteIndex i, double delta) const {
        auto d = diag_;
        d[static_cast<std::size_t>(local(i))] += delta;
        return {origin_, std::move(d), offdiag_};
    }

    /// Copy with the couplings (c, c+1) removed for every c in `cuts`.
    TruncatedJacobi with_cuts(std::span<const SiteIndex> cuts) const {
        auto e = offdiag_;
        for (SiteIndex c : cuts) {
            detail::require(c >= origin_ && c < last(), "TruncatedJacobi: cut " + std::to_string(c) +
                                                            " outside the window");
            e[static_cast<std::size_t>(c - origin_)] = 0.0;
        }
        return {origin_, diag_, std::move(e)};
    }

    Eigen::MatrixXd dense() const {
        const auto n = size();
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            m(i, i) = diag_[static_cast<std::size_t>(i)];
            if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = offdiag_[static_cast<std::size_t>(i)];
        }
        return m;
    }

private:
    SiteIndex origin_;
    std::vector<double> diag_;
    std::vector<double> offdiag_;
};

/// J = base + optional sparse diagonal perturbation.
class JacobiOperator {
public:
    explicit JacobiOperator(RecurrenceCoefficients base,
                            std::optional<SparsePerturbation> perturbation = std::nullopt)
        : base_(std::move(base)), perturbation_(std::move(perturbation)) {}

    const RecurrenceCoefficients& base() const { return base_; }
    const std::optional<SparsePerturbation>& perturbation() const { return perturbation_; }

    double diagonal(SiteIndex i) const {
        double v = base_.b(i);
        if (perturbation_)
            if (auto l = perturbation_->at(i)) v += *l;
        return v;
    }

    /// The (i, i+1) entry a_i.
    double offdiagonal(SiteIndex i) const { return base_.a(i); }

    double entry(SiteIndex i, SiteIndex j) const {
        detail::require(i >= 1 && j >= 1, "JacobiOperator: indices start at 1");
        if (i == j) return diagonal(i);
        if (j == i + 1) return offdiagonal(i);
        if (i == j + 1) return offdiagonal(j);
        return 0.0;
    }

    JacobiOperator unperturbed() const { return JacobiOperator(base_); }

    JacobiOperator with_perturbation(SparsePerturbation p) const {
        return JacobiOperator(base_, std::move(p));
    }

private:
    RecurrenceCoefficients base_;
    std::optional<SparsePerturbation> perturbation_;
};

inline JacobiOperator free_jacobi() {
    return JacobiOperator(RecurrenceCoefficients::constant(1.0, 0.0));
}

inline JacobiOperator constant_jacobi(double a, double b) {
    detail::require(a > 0.0, "constant_jacobi: a must be positive");
    return JacobiOperator(RecurrenceCoefficients::constant(a, b));
}

/// The finite section of J on [lo, hi].
inline TruncatedJacobi truncate(const JacobiOperator& J, SiteIndex lo, SiteIndex hi) {
    detail::require(lo >= 1 && lo <= hi, "truncate: need 1 <= lo <= hi");
    const auto n = static_cast<std::size_t>(hi - lo + 1);
    std::vector<double> d(n), e(n - 1);
    for (std::size_t k = 0; k < n; ++k) d[k] = J.base().b(lo + static_cast<SiteIndex>(k));
    for (std::size_t k = 0; k + 1 < n; ++k) e[k] = J.offdiagonal(lo + static_cast<SiteIndex>(k));
    if (const auto& p = J.perturbation())
        for (const auto& [site, lambda] : p->sites_in(lo, hi))
            d[static_cast<std::size_t>(site - lo)] += lambda;
    return {lo, std::move(d), std::move(e)};
}

/// The diagonal 0/1 projection onto the indices [lo, hi].
struct ProjectionWindow {
    SiteIndex lo;
    SiteIndex hi;

    ProjectionWindow(SiteIndex lo_, SiteIndex hi_) : lo(lo_), hi(hi_) {
        detail::require(lo >= 1 && lo <= hi, "ProjectionWindow: need 1 <= lo <= hi");
    }

    /// The leading projection onto [1, n].
    static ProjectionWindow leading(SiteIndex n) { return {1, n}; }

    /// All integers in the real interval [l1, l2], clipped to indices >= 1.
    static ProjectionWindow covering(double l1, double l2) {
        const auto lo = std::max<SiteIndex>(1, static_cast<SiteIndex>(std::ceil(l1)));
        const auto hi = static_cast<SiteIndex>(std::floor(l2));
        detail::require(lo <= hi, "ProjectionWindow::covering: interval holds no index");
        return {lo, hi};
    }

    SiteIndex size() const { return hi - lo + 1; }
    bool contains(SiteIndex i) const { return i >= lo && i <= hi; }

    /// Applies the projection to a vector whose entry 0 is the absolute index `origin`.
    template <typename Derived>
    typename Derived::PlainObject apply(const Eigen::MatrixBase<Derived>& v, SiteIndex origin) const {
        typename Derived::PlainObject out = v;
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            if (!contains(origin + r)) out.row(r).setZero();
        return out;
    }
};

/// Named rule k -> lambda_k (k is 1-based).
class LambdaRule {
public:
    static LambdaRule parse(std::string_view spec);

    double operator()(SiteIndex k) const { return fn_(k); }
    const std::string& name() const { return name_; }
    const std::string& decay_tag() const { return tag_; }

private:
    LambdaRule(std::string name, std::string tag, std::function<double(SiteIndex)> fn)
        : name_(std::move(name)), tag_(std::move(tag)), fn_(std::move(fn)) {}

    std::string name_;
    std::string tag_;
    std::function<double(SiteIndex)> fn_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view s, const std::string& what) {
    s = trim(s);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty())
        throw ConfigError("cannot parse " + what + " from '" + std::string(s) + "'");
    return v;
}

// Splits "name(arg1,arg2,...)" into the name and its arguments.
inline std::pair<std::string, std::vector<std::string>> split_call(std::string_view spec) {
    spec = trim(spec);
    const auto open = spec.find('(');
    if (open == std::string_view::npos) return {std::string(spec), {}};
    if (spec.back() != ')') throw ConfigError("unbalanced parentheses in '" + std::string(spec) + "'");
    std::string name(trim(spec.substr(0, open)));
    std::string_view inner = spec.substr(open + 1, spec.size() - open - 2);
    std::vector<std::string> args;
    int depth = 0;
    std::size_t startpos = 0;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
        if (i == inner.size() || (inner[i] == ',' && depth == 0)) {
            args.emplace_back(trim(inner.substr(startpos, i - startpos)));
            startpos = i + 1;
        } else if (inner[i] == '(') {
            ++depth;
        } else if (inner[i] == ')') {
            --depth;
        }
    }
    if (args.size() == 1 && args[0].empty()) args.clear();
    return {name, args};
}

}  // namespace detail

inline LambdaRule LambdaRule::parse(std::string_view spec) {
    auto [name, args] = detail::split_call(spec);
    if (name == "inv_log" && args.empty())
        return {"inv_log", "1/log(k+1)",
                [](SiteIndex k) { return 1.0 / std::log(static_cast<double>(k) + 1.0); }};
    if (name == "inv_sqrt" && args.empty())
        return {"inv_sqrt", "1/sqrt(k)",
                [](SiteIndex k) { return 1.0 / std::sqrt(static_cast<double>(k)); }};
    if (name == "inv_sqrt_log" && args.empty())
        return {"inv_sqrt_log", "1/sqrt(log(k+2))",
                [](SiteIndex k) { return 1.0 / std::sqrt(std::log(static_cast<double>(k) + 2.0)); }};
    if (name == "const_times_inv_log" && args.size() == 1) {
        const double c = detail::parse_double(args[0], "const_times_inv_log constant");
        return {"const_times_inv_log(" + args[0] + ")", args[0] + "/log(k+1)",
                [c](SiteIndex k) { return c / std::log(static_cast<double>(k) + 1.0); }};
    }
    if (name == "zero" && args.empty()) return {"zero", "0", [](SiteIndex) { return 0.0; }};
    throw ConfigError("unknown lambda rule '" + std::string(spec) + "'");
}

/// Perturbation at n_k = floor(k^{1/(1-beta)+eps}) with lambda_k = rule(k), for
/// every n_k <= index_limit.
inline SparsePerturbation sparse_perturbation(double beta, double eps, const LambdaRule& rule,
                                              SiteIndex index_limit,
                                              std::optional<SpacingCheck> spacing = SpacingCheck{}) {
    detail::require(index_limit >= 1, "sparse_perturbation: index_limit must be >= 1");
    const double p = 1.0 / (1.0 - beta) + eps;
    const auto count = static_cast<SiteIndex>(std::ceil(std::pow(static_cast<double>(index_limit), 1.0 / p))) + 1;
    std::vector<SiteIndex> kept;
    std::vector<double> values;
    // lambda follows the index k of the raw sequence; a collision keeps the first k.
    const long double pl = 1.0L / (1.0L - static_cast<long double>(beta)) + eps;
    SiteIndex prev = 0;
    for (SiteIndex k = 1; k <= count; ++k) {
        const auto nk = static_cast<SiteIndex>(std::floor(std::pow(static_cast<long double>(k), pl)));
        if (nk > index_limit) break;
        if (nk <= prev) continue;
        prev = nk;
        kept.push_back(nk);
        values.push_back(rule(k));
    }
    return {std::move(kept), std::move(values), beta, rule.decay_tag(), 1, spacing};
}

/// Options for resolving coefficient presets.
struct PresetOptions {
    SiteIndex index_limit = 10'000'000;
    std::optional<SpacingCheck> spacing = SpacingCheck{};
};

/// Resolves "free", "constant(a,b)", "sparse(beta,eps,rule)" and "kls_singular".
inline JacobiOperator make_preset(std::string_view id, const PresetOptions& opt = {}) {
    auto [name, args] = detail::split_call(id);
    if (name == "free" && args.empty()) return free_jacobi();
    if (name == "constant" && args.size() == 2) {
        const double a = detail::parse_double(args[0], "constant a");
        const double b = detail::parse_double(args[1], "constant b");
        if (!(a > 0.0)) throw ConfigError("constant(a,b) needs a > 0");
        return constant_jacobi(a, b);
    }
    if (name == "sparse" && args.size() == 3) {
        const double beta = detail::parse_double(args[0], "sparse beta");
        const double eps = detail::parse_double(args[1], "sparse eps");
        if (!(beta > 0.0 && beta < 1.0) || !(eps > 0.0))
            throw ConfigError("sparse(beta,eps,rule) needs 0 < beta < 1 and eps > 0");
        return free_jacobi().with_perturbation(
            sparse_perturbation(beta, eps, LambdaRule::parse(args[2]), opt.index_limit, opt.spacing));
    }
    if (name == "kls_singular" && args.empty()) {
        // n_k = 2^{k^2}, lambda_k = 1/sqrt(log(k+2)).
        const auto rule = LambdaRule::parse("inv_sqrt_log");
        std::vector<SiteIndex> pos;
        std::vector<double> val;
        for (SiteIndex k = 1; k * k < 62; ++k) {
            const SiteIndex nk = SiteIndex{1} << (k * k);
            if (nk > opt.index_limit) break;
            pos.push_back(nk);
            val.push_back(rule(k));
        }
        return free_jacobi().with_perturbation(
            SparsePerturbation(std::move(pos), std::move(val), 0.5, rule.decay_tag(), 1, opt.spacing));
    }
    throw ConfigError("unknown coefficient preset '" + std::string(id) + "'");
}

}  // namespace mesofluct
