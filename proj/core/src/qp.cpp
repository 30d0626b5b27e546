#include "scmlab/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace scmlab {
namespace {

// Dense Cholesky, row-major lower triangle in place.
void cholesky(std::vector<double>& m, int dim) {
    for (int j = 0; j < dim; ++j) {
        double diag = m[static_cast<std::size_t>(j) * dim + j];
        for (int k = 0; k < j; ++k) diag -= m[static_cast<std::size_t>(j) * dim + k] * m[static_cast<std::size_t>(j) * dim + k];
        if (diag <= 0.0) throw std::runtime_error("HorizonSolver: factorization lost positive definiteness");
        const double root = std::sqrt(diag);
        m[static_cast<std::size_t>(j) * dim + j] = root;
        for (int i = j + 1; i < dim; ++i) {
            double s = m[static_cast<std::size_t>(i) * dim + j];
            for (int k = 0; k < j; ++k) s -= m[static_cast<std::size_t>(i) * dim + k] * m[static_cast<std::size_t>(j) * dim + k];
            m[static_cast<std::size_t>(i) * dim + j] = s / root;
        }
    }
}

void cholesky_solve(const std::vector<double>& l, int dim, std::vector<double>& rhs) {
    for (int i = 0; i < dim; ++i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= l[static_cast<std::size_t>(i) * dim + k] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * dim + i];
    }
    for (int i = dim - 1; i >= 0; --i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < dim; ++k) s -= l[static_cast<std::size_t>(k) * dim + i] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * dim + i];
    }
}

// Dense LU with partial pivoting; returns false on (near-)singularity.
bool lu_solve(std::vector<double> a, int dim, std::vector<double>& rhs) {
    std::vector<int> perm(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        double best = std::abs(a[static_cast<std::size_t>(col) * dim + col]);
        for (int r = col + 1; r < dim; ++r) {
            const double v = std::abs(a[static_cast<std::size_t>(r) * dim + col]);
            if (v > best) { best = v; piv = r; }
        }
        if (best < 1e-12) return false;
        if (piv != col) {
            for (int k = 0; k < dim; ++k)
                std::swap(a[static_cast<std::size_t>(piv) * dim + k], a[static_cast<std::size_t>(col) * dim + k]);
            std::swap(rhs[static_cast<std::size_t>(piv)], rhs[static_cast<std::size_t>(col)]);
        }
        const double d = a[static_cast<std::size_t>(col) * dim + col];
        for (int r = col + 1; r < dim; ++r) {
            const double f = a[static_cast<std::size_t>(r) * dim + col] / d;
            if (f == 0.0) continue;
            a[static_cast<std::size_t>(r) * dim + col] = 0.0;
            for (int k = col + 1; k < dim; ++k)
                a[static_cast<std::size_t>(r) * dim + k] -= f * a[static_cast<std::size_t>(col) * dim + k];
            rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
        }
    }
    for (int i = dim - 1; i >= 0; --i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < dim; ++k) s -= a[static_cast<std::size_t>(i) * dim + k] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * dim + i];
    }
    return true;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

void HorizonProblem::validate() const {
    spec.validate();
    if (net_base_kw.empty()) throw std::invalid_argument("HorizonProblem: empty horizon");
    if (!(dt_hours > 0.0)) throw std::invalid_argument("HorizonProblem: dt_hours must be > 0");
    if (e0_kwh < spec.e_min_kwh - kSocTolKwh || e0_kwh > spec.e_max_kwh + kSocTolKwh)
        throw std::invalid_argument("HorizonProblem: e0 outside SoC bounds");
}

HorizonSolver::HorizonSolver(int horizon, double dt_hours, const BatterySpec& spec)
    : n_(horizon), dt_(dt_hours), spec_(spec), split_(spec.eta < 1.0) {
    if (horizon < 1) throw std::invalid_argument("HorizonSolver: horizon must be >= 1");
    spec.validate();
    nx_ = split_ ? 2 * n_ : n_;
    m_ = split_ ? 3 * n_ : 2 * n_;
    factorize();
}

void HorizonSolver::factorize() {
    const auto n = static_cast<std::size_t>(n_);
    const auto nx = static_cast<std::size_t>(nx_);
    chol_.assign(nx * nx, 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return chol_[i * nx + j]; };
    // K_ij = n - max(i, j) is the gram matrix of the cumulative-sum rows
    auto k_entry = [&](std::size_t i, std::size_t j) {
        return static_cast<double>(n - std::max(i, j));
    };
    const double dt2 = dt_ * dt_;
    if (!split_) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double v = rho_ * dt2 * k_entry(i, j);
                if (i == j) v += 2.0 + rho_;
                at(i, j) = v;
            }
    } else {
        const double eta = spec_.eta;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double k = dt2 * k_entry(i, j);
                double cc = rho_ * eta * eta * k;
                double dd = rho_ * k / (eta * eta);
                double cd = -rho_ * k;
                if (i == j) {
                    cc += 2.0 + rho_;
                    dd += 2.0 + rho_;
                    cd += -2.0;
                }
                at(i, j) = cc;
                at(n + i, n + j) = dd;
                at(n + i, j) = cd;
                if (i != j) at(n + j, i) = cd;  // lower triangle of the symmetric cd block
            }
    }
    cholesky(chol_, nx_);
}

void HorizonSolver::solve_normal(std::vector<double>& rhs_inout) const {
    cholesky_solve(chol_, nx_, rhs_inout);
}

std::vector<double> HorizonSolver::apply_a(std::span<const double> x) const {
    std::vector<double> out(static_cast<std::size_t>(m_));
    const auto n = static_cast<std::size_t>(n_);
    if (!split_) {
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            out[t] = x[t];
            acc += x[t];
            out[n + t] = dt_ * acc;
        }
    } else {
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            out[t] = x[t];
            out[n + t] = x[n + t];
            acc += spec_.eta * x[t] - x[n + t] / spec_.eta;
            out[2 * n + t] = dt_ * acc;
        }
    }
    return out;
}

std::vector<double> HorizonSolver::apply_at(std::span<const double> v) const {
    std::vector<double> out(static_cast<std::size_t>(nx_));
    const auto n = static_cast<std::size_t>(n_);
    if (!split_) {
        double suffix = 0.0;
        for (std::size_t t = n; t-- > 0;) {
            suffix += v[n + t];
            out[t] = v[t] + dt_ * suffix;
        }
    } else {
        double suffix = 0.0;
        for (std::size_t t = n; t-- > 0;) {
            suffix += v[2 * n + t];
            out[t] = v[t] + dt_ * spec_.eta * suffix;
            out[n + t] = v[n + t] - dt_ * suffix / spec_.eta;
        }
    }
    return out;
}

std::vector<double> HorizonSolver::restore_feasible(std::span<const double> p, double e0) const {
    std::vector<double> out(p.size());
    double e = std::clamp(e0, spec_.e_min_kwh, spec_.e_max_kwh);
    for (std::size_t t = 0; t < p.size(); ++t) {
        out[t] = project(p[t], feasible_set(e, dt_, spec_));
        e = step_soc(e, out[t], dt_, spec_);
    }
    return out;
}

double HorizonSolver::objective(std::span<const double> b, std::span<const double> p) const {
    double s = 0.0;
    for (std::size_t t = 0; t < b.size(); ++t) {
        const double g = b[t] + p[t];
        s += g * g;
    }
    return s;
}

// Active-set polish for the eta == 1 path: pin constraints at their bounds,
// solve the equality-constrained KKT system exactly and accept the result if
// it is feasible with correctly signed multipliers.
bool HorizonSolver::try_polish(std::span<const double> b, double e0, std::span<const double> z,
                               std::span<const double> y, double tol,
                               std::vector<double>& p_out) const {
    const auto n = static_cast<std::size_t>(n_);
    const double el = spec_.e_min_kwh - e0;
    const double eu = spec_.e_max_kwh - e0;
    const double athr = std::max(10.0 * tol, 1e-9);

    struct ActiveRow { std::size_t row; bool upper; };
    std::vector<ActiveRow> act;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const double lo = i < n ? spec_.p_min_kw : el;
        const double hi = i < n ? spec_.p_max_kw : eu;
        const bool near_lo = z[i] - lo <= athr;
        const bool near_hi = hi - z[i] <= athr;
        if (near_lo && near_hi) {
            act.push_back({i, true});  // pinched window, treat as equality at the upper bound
        } else if (near_lo && y[i] < athr) {
            act.push_back({i, false});
        } else if (near_hi && y[i] > -athr) {
            act.push_back({i, true});
        }
    }
    const std::size_t k = act.size();
    const std::size_t dim = n + k;
    std::vector<double> kkt(dim * dim, 0.0);
    std::vector<double> rhs(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        kkt[i * dim + i] = 2.0;
        rhs[i] = -2.0 * b[i];
    }
    for (std::size_t r = 0; r < k; ++r) {
        const auto [row, upper] = act[r];
        if (row < n) {
            kkt[row * dim + n + r] = 1.0;
            kkt[(n + r) * dim + row] = 1.0;
            rhs[n + r] = upper ? spec_.p_max_kw : spec_.p_min_kw;
        } else {
            for (std::size_t t = 0; t <= row - n; ++t) {
                kkt[t * dim + n + r] = dt_;
                kkt[(n + r) * dim + t] = dt_;
            }
            rhs[n + r] = upper ? eu : el;
        }
    }
    if (!lu_solve(std::move(kkt), static_cast<int>(dim), rhs)) return false;

    std::vector<double> x(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(n));
    // multiplier sign check (positive pushes off the upper bound)
    for (std::size_t r = 0; r < k; ++r) {
        const double nu = rhs[n + r];
        const double lo = act[r].row < n ? spec_.p_min_kw : el;
        const double hi = act[r].row < n ? spec_.p_max_kw : eu;
        if (hi - lo <= athr) continue;  // equality row, any sign valid
        if (act[r].upper && nu < -1e-7) return false;
        if (!act[r].upper && nu > 1e-7) return false;
    }
    // full feasibility check
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (x[t] < spec_.p_min_kw - 1e-8 || x[t] > spec_.p_max_kw + 1e-8) return false;
        acc += dt_ * x[t];
        if (acc < el - 1e-8 || acc > eu + 1e-8) return false;
    }
    p_out = std::move(x);
    return true;
}

HorizonSolution HorizonSolver::solve(std::span<const double> net_base_kw, double e0_kwh,
                                     const SolveOptions& opts) {
    if (static_cast<int>(net_base_kw.size()) != n_)
        throw std::invalid_argument("HorizonSolver: net_base length != horizon");
    const auto n = static_cast<std::size_t>(n_);
    const auto nx = static_cast<std::size_t>(nx_);
    const auto m = static_cast<std::size_t>(m_);
    const double el = spec_.e_min_kwh - e0_kwh;
    const double eu = spec_.e_max_kwh - e0_kwh;

    auto clamp_row = [&](std::size_t i, double v) {
        if (!split_) {
            if (i < n) return std::clamp(v, spec_.p_min_kw, spec_.p_max_kw);
            return std::clamp(v, el, eu);
        }
        if (i < n) return std::clamp(v, 0.0, spec_.p_max_kw);
        if (i < 2 * n) return std::clamp(v, 0.0, -spec_.p_min_kw);
        return std::clamp(v, el, eu);
    };

    if (!have_warm_) {
        x_.assign(nx, 0.0);
        z_.assign(m, 0.0);
        u_.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) z_[i] = clamp_row(i, 0.0);
        have_warm_ = true;
    }

    // linear objective term: 2*b for eta == 1, (2b, -2b) for the split
    // variables; the split adds a tiny throughput penalty so ties between
    // complementary and simultaneous charge/discharge break toward the former
    constexpr double kThroughputEps = 1e-7;
    std::vector<double> lin(nx);
    for (std::size_t t = 0; t < n; ++t) {
        lin[t] = -2.0 * net_base_kw[t];
        if (split_) {
            lin[t] -= kThroughputEps;
            lin[n + t] = 2.0 * net_base_kw[t] - kThroughputEps;
        }
    }

    auto extract_p = [&](std::span<const double> x) {
        std::vector<double> p(n);
        for (std::size_t t = 0; t < n; ++t) p[t] = split_ ? x[t] - x[n + t] : x[t];
        return p;
    };

    HorizonSolution sol;
    std::vector<double> best_p = restore_feasible(extract_p(x_), e0_kwh);
    double best_obj = objective(net_base_kw, best_p);
    sol.objective_history.push_back(best_obj);

    std::vector<double> z_prev(m);
    double r_prim = 0.0, r_dual = 0.0;
    int iter = 0;
    bool resid_ok = false;
    for (; iter < opts.max_iter; ++iter) {
        // x-update: (2H + rho A^T A) x = -lin_grad + rho A^T (z - u)
        std::vector<double> v(m);
        for (std::size_t i = 0; i < m; ++i) v[i] = z_[i] - u_[i];
        std::vector<double> rhs = apply_at(v);
        for (std::size_t i = 0; i < nx; ++i) rhs[i] = lin[i] + rho_ * rhs[i];
        solve_normal(rhs);
        x_ = std::move(rhs);

        // z-update and scaled dual update
        const auto ax = apply_a(x_);
        z_prev = z_;
        for (std::size_t i = 0; i < m; ++i) {
            z_[i] = clamp_row(i, ax[i] + u_[i]);
            u_[i] += ax[i] - z_[i];
        }

        r_prim = 0.0;
        for (std::size_t i = 0; i < m; ++i) r_prim = std::max(r_prim, std::abs(ax[i] - z_[i]));
        std::vector<double> dz(m);
        for (std::size_t i = 0; i < m; ++i) dz[i] = z_[i] - z_prev[i];
        r_dual = rho_ * inf_norm(apply_at(dz));

        if ((iter + 1) % 25 == 0 || (r_prim <= opts.tol && r_dual <= opts.tol)) {
            auto p = restore_feasible(extract_p(x_), e0_kwh);
            const double obj = objective(net_base_kw, p);
            if (obj < best_obj) {
                best_obj = obj;
                best_p = std::move(p);
            }
            sol.objective_history.push_back(best_obj);
        }
        if (r_prim <= opts.tol && r_dual <= opts.tol) {
            resid_ok = true;
            ++iter;
            break;
        }

        // residual balancing
        if ((iter + 1) % 100 == 0) {
            double scale = 1.0;
            if (r_prim > 10.0 * r_dual) scale = 5.0;
            else if (r_dual > 10.0 * r_prim) scale = 0.2;
            if (scale != 1.0) {
                const double new_rho = std::clamp(rho_ * scale, 1e-4, 1e6);
                if (new_rho != rho_) {
                    for (auto& ui : u_) ui *= rho_ / new_rho;
                    rho_ = new_rho;
                    factorize();
                }
            }
        }
    }

    sol.iterations = iter;
    sol.converged = resid_ok;

    bool polished = false;
    if (!split_ && opts.polish && resid_ok) {
        std::vector<double> y(m);
        for (std::size_t i = 0; i < m; ++i) y[i] = rho_ * u_[i];
        std::vector<double> p_pol;
        if (try_polish(net_base_kw, e0_kwh, z_, y, opts.tol, p_pol)) {
            p_pol = restore_feasible(p_pol, e0_kwh);
            const double obj = objective(net_base_kw, p_pol);
            if (obj <= best_obj + 1e-12) {
                best_obj = std::min(best_obj, obj);
                best_p = std::move(p_pol);
                polished = true;
            }
        }
    }
    (void)polished;

    if (split_) {
        // simultaneous charge/discharge with the same net power can be shrunk
        // out of the representation unless the wasted energy was load-bearing
        // (needed to stay under e_max); shrinking only raises the SoC path, so
        // recheck the upper bound and flag the cases where the shrink fails
        bool shrink_ok = true;
        double e = e0_kwh;
        for (std::size_t t = 0; t < n; ++t) {
            const double c = std::max(0.0, z_[t]);
            const double d = std::max(0.0, z_[static_cast<std::size_t>(n_) + t]);
            const double both = std::min(c, d);
            e += dt_ * (spec_.eta * (c - both) - (d - both) / spec_.eta);
            if (e > spec_.e_max_kwh + opts.tol) {
                shrink_ok = false;
                break;
            }
        }
        sol.complementarity_ok = true;
        if (!shrink_ok) {
            for (std::size_t t = 0; t < n; ++t)
                if (z_[t] * z_[static_cast<std::size_t>(n_) + t] > opts.tol)
                    sol.complementarity_ok = false;
        }
    }

    sol.p_b_kw = std::move(best_p);
    sol.objective_value = best_obj;
    sol.objective_history.push_back(best_obj);
    return sol;
}

void HorizonSolver::shift_warm_start() {
    if (!have_warm_) return;
    const auto n = static_cast<std::size_t>(n_);
    auto shift_block = [n](std::vector<double>& v, std::size_t off) {
        for (std::size_t t = 0; t + 1 < n; ++t) v[off + t] = v[off + t + 1];
    };
    shift_block(x_, 0);
    if (split_) shift_block(x_, n);
    const std::size_t blocks = split_ ? 3 : 2;
    for (std::size_t b = 0; b < blocks; ++b) {
        shift_block(z_, b * n);
        shift_block(u_, b * n);
    }
}

void HorizonSolver::reset_warm_start() { have_warm_ = false; }

HorizonSolution solve_horizon(const HorizonProblem& hp, double tol, int max_iter) {
    hp.validate();
    HorizonSolver solver(static_cast<int>(hp.net_base_kw.size()), hp.dt_hours, hp.spec);
    SolveOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    return solver.solve(hp.net_base_kw, hp.e0_kwh, opts);
}

}  // namespace scmlab
