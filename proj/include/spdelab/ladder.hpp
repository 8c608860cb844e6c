#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spdelab/drift.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/quadrature.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/stats.hpp"

namespace spdelab::ladder {

// Mollifier: the standard bump exp(-1/(1-y^2)) on (-1,1), normalized to unit
// mass. Even symmetry makes the mollification of odd drifts vanish at 0.

namespace detail {

inline double bump_unnormalized(double y) {
    const double s = 1.0 - y * y;
    return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

inline double bump_mass() {
    static const double mass =
        quad::adaptive_simpson([](double y) { return bump_unnormalized(y); }, -1.0, 1.0, 1e-14).value;
    return mass;
}

}  // namespace detail

inline double mollifier(double y) { return detail::bump_unnormalized(y) / detail::bump_mass(); }

inline double mollifier_prime(double y) {
    const double s = 1.0 - y * y;
    if (s <= 0.0) return 0.0;
    return mollifier(y) * (-2.0 * y / (s * s));
}

namespace detail {

/// Composite-Simpson integral of w(z) * b(x - z/n) over z in [-1,1], split at
/// the images of b's breakpoints so only smooth pieces are integrated.
/// Evaluation points are nudged off the splits to avoid sampling b exactly
/// at a discontinuity.
inline double mollify_quadrature(const std::function<double(double)>& b,
                                 const std::function<double(double)>& weight, double x, int n,
                                 const std::vector<double>& breakpoints, int nodes_per_piece = 401) {
    std::vector<double> splits{-1.0, 1.0};
    for (double bp : breakpoints) {
        const double z = n * (x - bp);
        if (z > -1.0 && z < 1.0) splits.push_back(z);
    }
    std::sort(splits.begin(), splits.end());
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < splits.size(); ++p) {
        const double lo = splits[p], hi = splits[p + 1];
        if (hi - lo < 1e-14) continue;
        const double nudge = 1e-9 * (hi - lo);
        int nn = nodes_per_piece;
        if (nn % 2 == 0) ++nn;
        const double h = (hi - lo) / (nn - 1);
        double s = 0.0;
        for (int q = 0; q < nn; ++q) {
            double z = lo + q * h;
            if (q == 0) z += nudge;
            else if (q == nn - 1) z -= nudge;
            const double w = (q == 0 || q == nn - 1) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
            s += w * weight(z) * b(x - z / n);
        }
        total += s * h / 3.0;
    }
    return total;
}

struct LookupTable {
    double lo = 0.0;
    double step = 0.0;
    std::vector<double> values;

    double eval(double x) const {
        if (values.empty()) throw std::logic_error("LookupTable: empty");
        const double pos = (x - lo) / step;
        if (pos <= 0.0) return values.front();
        const std::size_t last = values.size() - 1;
        if (pos >= static_cast<double>(last)) return values.back();
        const std::size_t i = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(i);
        return values[i] * (1.0 - f) + values[i + 1] * f;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    double max_slope() const {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i)
            m = std::max(m, std::abs(values[i + 1] - values[i]) / step);
        return m;
    }
};

}  // namespace detail

struct MollifyOptions {
    double lo = -8.0;          // lookup-table range, clamped outside
    double hi = 8.0;
    double step = 0.0;         // 0: choose min(0.02, 0.2/n)
    int quadrature_nodes = 401;
};

enum class MemberKind { mollified, running_min, inf_limit };

/// One rung of the approximation ladder: a cached, grid-interpolated function
/// with its sup-norm and Lipschitz estimate.
class LadderMember {
public:
    LadderMember(MemberKind kind, std::string base_name, int n, int k, double base_sup,
                 detail::LookupTable table, detail::LookupTable deriv = {})
        : kind_(kind), base_name_(std::move(base_name)), n_(n), k_(k), base_sup_(base_sup),
          table_(std::make_shared<detail::LookupTable>(std::move(table))),
          deriv_(std::make_shared<detail::LookupTable>(std::move(deriv))) {}

    MemberKind kind() const { return kind_; }
    int n() const { return n_; }
    int k() const { return k_; }
    double sup_norm() const { return table_->max_abs(); }
    double lipschitz_estimate() const { return table_->max_slope(); }
    bool has_derivative() const { return !deriv_->values.empty(); }

    double operator()(double x) const { return table_->eval(x); }
    double derivative(double x) const {
        if (!has_derivative()) throw std::logic_error("LadderMember: no derivative table");
        return deriv_->eval(x);
    }

    /// View the member as a DriftSpec for the solver.
    DriftSpec as_drift() const {
        DriftSpec d;
        auto tab = table_;
        d.b = [tab](double x) { return tab->eval(x); };
        d.sup_norm = sup_norm();
        d.lipschitz_const = lipschitz_estimate();
        if (has_derivative()) {
            auto der = deriv_;
            d.smoothness = Smoothness::c1;
            d.bprime = [der](double x) { return der->eval(x); };
        } else {
            d.smoothness = Smoothness::lipschitz;
        }
        d.name = base_name_ + "_" + (kind_ == MemberKind::mollified ? "m" : "rm") +
                 std::to_string(n_) + (kind_ == MemberKind::mollified ? "" : ":" + std::to_string(k_));
        return d;
    }

    const detail::LookupTable& table() const { return *table_; }

private:
    MemberKind kind_;
    std::string base_name_;
    int n_, k_;
    double base_sup_;
    std::shared_ptr<detail::LookupTable> table_;
    std::shared_ptr<detail::LookupTable> deriv_;
};

namespace detail {

inline double resolve_step(int n, const MollifyOptions& opt) {
    return opt.step > 0.0 ? opt.step : std::min(0.02, 0.2 / n);
}

inline LookupTable build_table(const DriftSpec& base, int n, const MollifyOptions& opt, bool deriv,
                               int threads = 0) {
    LookupTable t;
    t.lo = opt.lo;
    t.step = resolve_step(n, opt);
    const std::size_t count = static_cast<std::size_t>(std::floor((opt.hi - opt.lo) / t.step)) + 1;
    t.values.resize(count);
    // Away from breakpoints the weights are the same at every x, so hoist
    // weight(z_q) out of the per-node loop via a cached plain-Simpson rule.
    int nn = opt.quadrature_nodes;
    if (nn % 2 == 0) ++nn;
    const double h = 2.0 / (nn - 1);
    std::vector<double> wcache(nn);
    for (int q = 0; q < nn; ++q) {
        const double z = -1.0 + q * h;
        const double simp = (q == 0 || q == nn - 1) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
        wcache[q] = simp * (deriv ? mollifier_prime(z) : mollifier(z)) * h / 3.0;
    }
    auto weight_fn = deriv ? std::function<double(double)>(mollifier_prime)
                           : std::function<double(double)>(mollifier);
    parallel_for(count, [&](std::size_t i) {
        const double x = t.lo + static_cast<double>(i) * t.step;
        bool near_break = false;
        for (double bp : base.breakpoints)
            if (std::abs(n * (x - bp)) < 1.0 + 1e-9) { near_break = true; break; }
        double v;
        if (near_break) {
            v = mollify_quadrature(base.b, weight_fn, x, n, base.breakpoints, opt.quadrature_nodes);
        } else {
            v = 0.0;
            for (int q = 0; q < nn; ++q) v += wcache[q] * base.b(x - (-1.0 + q * h) / n);
        }
        t.values[i] = deriv ? n * v : v;
        if (!std::isfinite(t.values[i]))
            throw std::runtime_error("mollify: quadrature produced non-finite value at x = " +
                                     std::to_string(x));
    }, threads);
    return t;
}

}  // namespace detail

/// b_n(x) = n * int rho(n(x-y)) b(y) dy, cached on a lookup grid. The result
/// is smooth with ||b_n|| <= ||b|| and carries its derivative table.
inline LadderMember mollify(const DriftSpec& base, int n, const MollifyOptions& opt = {},
                            int threads = 0) {
    if (n < 1) throw std::invalid_argument("mollify: n must be >= 1");
    if (!(opt.lo < opt.hi)) throw std::invalid_argument("mollify: bad table range");
    auto table = detail::build_table(base, n, opt, false, threads);
    auto deriv = detail::build_table(base, n, opt, true, threads);
    return LadderMember(MemberKind::mollified, base.name, n, n, base.sup_norm,
                        std::move(table), std::move(deriv));
}

/// Pointwise minimum of mollify(base, j) for j = n..k. Lipschitz but not C1.
inline LadderMember running_min(const DriftSpec& base, int n, int k, const MollifyOptions& opt = {},
                                int threads = 0) {
    if (n < 1) throw std::invalid_argument("running_min: n must be >= 1");
    if (n > k) throw std::domain_error("running_min: need n <= k");
    MollifyOptions shared = opt;
    shared.step = detail::resolve_step(k, opt);  // finest member sets the shared grid
    detail::LookupTable acc = detail::build_table(base, n, shared, false, threads);
    for (int j = n + 1; j <= k; ++j) {
        const detail::LookupTable tj = detail::build_table(base, j, shared, false, threads);
        for (std::size_t i = 0; i < acc.values.size(); ++i)
            acc.values[i] = std::min(acc.values[i], tj.values[i]);
    }
    return LadderMember(MemberKind::running_min, base.name, n, k, base.sup_norm, std::move(acc));
}

/// B_n = inf_{j >= n} b_j, realized by doubling k until the table stabilizes
/// below sup-difference 1e-6.
inline LadderMember inf_limit(const DriftSpec& base, int n, const MollifyOptions& opt = {},
                              int threads = 0, int k_cap = 4096) {
    int k = std::max(2 * n, n + 1);
    LadderMember cur = running_min(base, n, k, opt, threads);
    while (2 * k <= k_cap) {
        LadderMember next = running_min(base, n, 2 * k, opt, threads);
        double sup_diff = 0.0;
        for (std::size_t i = 0; i < cur.table().values.size(); ++i)
            sup_diff = std::max(sup_diff, std::abs(cur.table().values[i] - next.table().values[i]));
        if (sup_diff < 1e-6)
            return LadderMember(MemberKind::inf_limit, base.name, n, 2 * k, base.sup_norm,
                                detail::LookupTable(next.table()));
        k *= 2;
        cur = std::move(next);
    }
    throw std::runtime_error("inf_limit: running minimum did not stabilize below k = " +
                             std::to_string(k_cap));
}

struct ConvergenceRow {
    int n;
    int k;
    int seeds;
    double mse;          // E[(u_{n,k} - u_ref)^2] at the probe
    double se;
    double cauchy_mse;   // E[(u_entry - u_prev_entry)^2], NaN for the first row
    double cauchy_se;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    bool monotone_within_2se;
    double max_violation;  // largest SE-adjusted increase along the schedule
};

/// Monte Carlo distance between ladder solutions and the direct solve with
/// the base drift, common noise per seed.
inline ConvergenceStudy convergence_study(const DriftSpec& base, const SpaceTimeGrid& grid,
                                          const std::function<double(double)>& u0, double probe_t,
                                          double probe_x, const std::vector<std::uint64_t>& seeds,
                                          const std::vector<std::pair<int, int>>& schedule,
                                          const MollifyOptions& opt = {}, int threads = 0) {
    if (schedule.empty()) throw std::invalid_argument("convergence_study: empty schedule");
    if (seeds.size() < 100) throw std::invalid_argument("convergence_study: need >= 100 seeds");
    const double it = probe_t / grid.dt(), jx = probe_x / grid.dx();
    if (std::abs(it - std::round(it)) > 1e-9 || std::abs(jx - std::round(jx)) > 1e-9)
        throw std::domain_error("convergence_study: probe point must lie on the grid");
    const int pi = static_cast<int>(std::round(it)), pj = static_cast<int>(std::round(jx));

    std::vector<DriftSpec> members;
    members.reserve(schedule.size());
    for (auto [n, k] : schedule) members.push_back(running_min(base, n, k, opt, threads).as_drift());

    const std::size_t ns = seeds.size(), ne = schedule.size();
    std::vector<double> sq(ns * ne), cauchy(ns * ne, 0.0);
    parallel_for(ns, [&](std::size_t s) {
        const NoiseRealization noise = sample_noise(grid, seeds[s]);
        const double ref = solve(grid, base, u0, noise).at(pi, pj);
        double prev = 0.0;
        for (std::size_t e = 0; e < ne; ++e) {
            const double v = solve(grid, members[e], u0, noise).at(pi, pj);
            sq[s * ne + e] = (v - ref) * (v - ref);
            if (e > 0) cauchy[s * ne + e] = (v - prev) * (v - prev);
            prev = v;
        }
    }, threads);

    ConvergenceStudy out;
    out.monotone_within_2se = true;
    out.max_violation = 0.0;
    std::vector<double> col(ns);
    double prev_mse = 0.0, prev_se = 0.0;
    for (std::size_t e = 0; e < ne; ++e) {
        for (std::size_t s = 0; s < ns; ++s) col[s] = sq[s * ne + e];
        const double m = stats::mean(col), se = stats::se_mean(col);
        double cm = std::numeric_limits<double>::quiet_NaN(), cse = cm;
        if (e > 0) {
            for (std::size_t s = 0; s < ns; ++s) col[s] = cauchy[s * ne + e];
            cm = stats::mean(col);
            cse = stats::se_mean(col);
            const double slack = 2.0 * (se + prev_se);
            if (m > prev_mse + slack) {
                out.monotone_within_2se = false;
                out.max_violation = std::max(out.max_violation, m - prev_mse - slack);
            }
        }
        out.rows.push_back({schedule[e].first, schedule[e].second, static_cast<int>(ns), m, se, cm, cse});
        prev_mse = m;
        prev_se = se;
    }
    return out;
}

}  // namespace spdelab::ladder
