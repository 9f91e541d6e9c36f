#pragma once

#include "sigverify/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace sigverify {

/// row_lo <= A x <= row_hi, lo <= x <= hi, optionally minimizing objective · x.
struct LinearProgram {
    Vector lo;
    Vector hi;
    Matrix A;
    Vector row_lo;
    Vector row_hi;
    Vector objective;  // empty: pure feasibility

    explicit LinearProgram(int num_vars = 0);

    int num_vars() const { return static_cast<int>(lo.size()); }
    int num_rows() const { return static_cast<int>(A.rows()); }

    /// Appends sum(coefficients) in [lo, hi]; returns the row index.
    int add_row(const std::vector<std::pair<int, double>> &coefficients, double lo, double hi);
    int add_le(const std::vector<std::pair<int, double>> &coefficients, double rhs)
    {
        return add_row(coefficients, -kInfinity, rhs);
    }
    int add_ge(const std::vector<std::pair<int, double>> &coefficients, double rhs)
    {
        return add_row(coefficients, rhs, kInfinity);
    }
    int add_eq(const std::vector<std::pair<int, double>> &coefficients, double rhs)
    {
        return add_row(coefficients, rhs, rhs);
    }
    /// Intersects the bounds of variable j with [lo, hi].
    void tighten(int j, double lo, double hi);

    /// Largest bound or row violation of x.
    double max_violation(const Vector &x) const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Unknown };

const char *lp_status_name(LpStatus s);

struct LpOptions {
    double feasibility_tol = 1e-9;  // internal pivoting tolerance
    double residual_tol = kTolLp;   // accepted residual of a returned point
    double pivot_tol = 1e-9;
    int refactor_every = 50;
    long iteration_limit = -1;  // -1: 50·(rows + cols) + 1000
};

struct LpResult {
    LpStatus status = LpStatus::Unknown;
    Vector x;             // Optimal only
    double value = 0.0;   // objective value, 0 for feasibility problems
    Vector certificate;   // Infeasible from pivoting: y with max over the box of yᵀ[A | −I] z < 0; empty for crossed bounds
    long iterations = 0;
    std::string message;
};

/// Dense bounded-variable primal simplex: composite phase 1 on the sum of
/// infeasibilities, then phase 2 on the objective. Partial Dantzig pricing
/// switches to Bland's rule after 2·(rows + cols) consecutive degenerate
/// pivots. Feasible points are re-checked by direct residual evaluation and
/// infeasibility by evaluating the Farkas certificate; anything that fails a
/// re-check is reported as Unknown.
LpResult lp_solve(const LinearProgram &lp, const LpOptions &options = {});

/// True when y certifies that no z in the bounds satisfies [A | −I] z = 0.
bool check_farkas(const LinearProgram &lp, const Vector &y, double margin = 1e-9);

}  // namespace sigverify
