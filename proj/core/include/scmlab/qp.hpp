#pragma once

#include <span>
#include <vector>

#include "scmlab/battery.hpp"

namespace scmlab {

/// Finite-horizon dispatch problem: minimize sum (net_base_t + p_t)^2 over
/// battery powers p, subject to power ratings and the SoC window reached by
/// accumulating p from e0.
struct HorizonProblem {
    std::vector<double> net_base_kw;  // forecast p_d - p_pv
    double e0_kwh = 0.0;
    double dt_hours = 0.5;
    BatterySpec spec;

    void validate() const;
};

struct HorizonSolution {
    std::vector<double> p_b_kw;
    double objective_value = 0.0;  // sum (net_base + p_b)^2
    int iterations = 0;
    bool converged = false;
    bool complementarity_ok = true;  // eta < 1 split relaxation audit
    std::vector<double> objective_history;  // feasible incumbents, non-increasing
};

struct SolveOptions {
    double tol = 1e-6;
    int max_iter = 50000;
    bool polish = true;
};

/// ADMM solver for HorizonProblem. The linear-system factorization depends
/// only on (horizon, dt, spec), so one instance can be reused across a
/// receding-horizon run; shift_warm_start() advances the carried iterate by
/// one interval between consecutive solves.
class HorizonSolver {
public:
    HorizonSolver(int horizon, double dt_hours, const BatterySpec& spec);

    HorizonSolution solve(std::span<const double> net_base_kw, double e0_kwh,
                          const SolveOptions& opts = {});

    void shift_warm_start();
    void reset_warm_start();

    int horizon() const { return n_; }

private:
    void factorize();
    void solve_normal(std::vector<double>& rhs_inout) const;  // M x = rhs via Cholesky
    std::vector<double> apply_a(std::span<const double> x) const;
    std::vector<double> apply_at(std::span<const double> v) const;
    std::vector<double> restore_feasible(std::span<const double> p, double e0) const;
    double objective(std::span<const double> b, std::span<const double> p) const;
    bool try_polish(std::span<const double> b, double e0, std::span<const double> z,
                    std::span<const double> y, double tol, std::vector<double>& p_out) const;

    int n_;            // horizon length
    int nx_;           // n (eta == 1) or 2n (split charge/discharge)
    int m_;            // constraint rows: 2n or 3n
    double dt_;
    BatterySpec spec_;
    bool split_;       // eta < 1 path
    double rho_ = 1.0;
    std::vector<double> chol_;  // dense lower factor of 2*H + rho*(A^T A), nx x nx

    // warm-started iterate
    std::vector<double> x_, z_, u_;
    bool have_warm_ = false;
};

/// One-shot convenience wrapper.
HorizonSolution solve_horizon(const HorizonProblem& hp, double tol = 1e-6, int max_iter = 50000);

}  // namespace scmlab
