#include "sigverify/lp.hpp"

#include <Eigen/LU>

namespace sigverify {

LinearProgram::LinearProgram(int num_vars)
    : lo(Vector::Constant(num_vars, -kInfinity)), hi(Vector::Constant(num_vars, kInfinity)), A(0, num_vars),
      row_lo(0), row_hi(0)
{
}

int LinearProgram::add_row(const std::vector<std::pair<int, double>> &coefficients, double lo_, double hi_)
{
    const Eigen::Index r = A.rows();
    A.conservativeResize(r + 1, Eigen::NoChange);
    A.row(r).setZero();
    for (const auto &[j, c] : coefficients) {
        if (j < 0 || j >= num_vars())
            throw Error("LP row references variable " + std::to_string(j));
        if (!std::isfinite(c))
            throw Error("LP row has a non-finite coefficient");
        A(r, j) += c;
    }
    row_lo.conservativeResize(r + 1);
    row_hi.conservativeResize(r + 1);
    row_lo[r] = lo_;
    row_hi[r] = hi_;
    return static_cast<int>(r);
}

void LinearProgram::tighten(int j, double lo_, double hi_)
{
    lo[j] = std::max(lo[j], lo_);
    hi[j] = std::min(hi[j], hi_);
}

double LinearProgram::max_violation(const Vector &x) const
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j)
        worst = std::max({worst, lo[j] - x[j], x[j] - hi[j]});
    const Vector ax = A * x;
    for (Eigen::Index i = 0; i < ax.size(); ++i)
        worst = std::max({worst, row_lo[i] - ax[i], ax[i] - row_hi[i]});
    return worst;
}

const char *lp_status_name(LpStatus s)
{
    switch (s) {
    case LpStatus::Optimal:
        return "optimal";
    case LpStatus::Infeasible:
        return "infeasible";
    case LpStatus::Unbounded:
        return "unbounded";
    case LpStatus::Unknown:
        return "unknown";
    }
    return "?";
}

bool check_farkas(const LinearProgram &lp, const Vector &y, double margin)
{
    if (y.size() != lp.num_rows() || !y.allFinite())
        return false;
    const int n = lp.num_vars();
    const int m = lp.num_rows();
    const double scale = 1.0 + y.lpNorm<1>();
    double top = 0.0;
    auto add = [&](double g, double lo, double hi) {
        const double b = g > 0.0 ? hi : lo;
        if (std::isinf(b)) {
            if (std::abs(g) > 1e-12 * scale)
                return false;
            return true;
        }
        top += g * b;
        return true;
    };
    const Vector g = lp.A.transpose() * y;
    for (int j = 0; j < n; ++j)
        if (g[j] != 0.0 && !add(g[j], lp.lo[j], lp.hi[j]))
            return false;
    for (int i = 0; i < m; ++i)
        if (y[i] != 0.0 && !add(-y[i], lp.row_lo[i], lp.row_hi[i]))
            return false;
    return top < -margin;
}

namespace {

enum class VarState { Basic, AtLower, AtUpper, Free };

class Simplex {
public:
    Simplex(const LinearProgram &lp, const LpOptions &opt) : lp_(lp), opt_(opt)
    {
        n_ = lp.num_vars();
        m_ = lp.num_rows();
        total_ = n_ + m_;
        lb_.resize(total_);
        ub_.resize(total_);
        lb_ << lp.lo, lp.row_lo;
        ub_ << lp.hi, lp.row_hi;
        limit_ = opt.iteration_limit >= 0 ? opt.iteration_limit : 50L * total_ + 1000;
    }

    LpResult run()
    {
        LpResult res;
        for (int j = 0; j < total_; ++j)
            if (lb_[j] > ub_[j]) {
                res.status = LpStatus::Infeasible;
                res.message = "crossed bounds on " + std::string(j < n_ ? "variable " : "row ") +
                              std::to_string(j < n_ ? j : j - n_);
                return res;
            }
        if (m_ == 0)
            return trivial(res);

        initialize();
        if (!phase(1, res))
            return res;
        const bool has_objective = lp_.objective.size() == n_ && n_ > 0;
        if (has_objective && !phase(2, res))
            return res;
        return finish(res, has_objective);
    }

private:
    const LinearProgram &lp_;
    const LpOptions &opt_;
    int n_ = 0, m_ = 0, total_ = 0;
    long limit_ = 0;
    long iterations_ = 0;
    Vector lb_, ub_, x_;
    std::vector<VarState> state_;
    std::vector<int> head_;
    Matrix binv_;
    int since_refactor_ = 0;
    int price_start_ = 0;

    LpResult trivial(LpResult &res)
    {
        res.x.resize(n_);
        for (int j = 0; j < n_; ++j)
            res.x[j] = std::isfinite(lb_[j]) ? lb_[j] : (std::isfinite(ub_[j]) ? ub_[j] : 0.0);
        if (lp_.objective.size() == n_) {
            for (int j = 0; j < n_; ++j) {
                const double c = lp_.objective[j];
                if ((c > 0.0 && std::isinf(lb_[j])) || (c < 0.0 && std::isinf(ub_[j]))) {
                    res.status = LpStatus::Unbounded;
                    return res;
                }
                res.x[j] = c > 0.0 ? lb_[j] : (c < 0.0 ? ub_[j] : res.x[j]);
            }
            res.value = lp_.objective.dot(res.x);
        }
        res.status = LpStatus::Optimal;
        return res;
    }

    Vector column(int j) const
    {
        if (j < n_)
            return lp_.A.col(j);
        Vector e = Vector::Zero(m_);
        e[j - n_] = -1.0;
        return e;
    }

    double dot_column(const Vector &y, int j) const { return j < n_ ? y.dot(lp_.A.col(j)) : -y[j - n_]; }

    void initialize()
    {
        x_ = Vector::Zero(total_);
        state_.assign(total_, VarState::AtLower);
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lb_[j])) {
                x_[j] = lb_[j];
                state_[j] = VarState::AtLower;
            } else if (std::isfinite(ub_[j])) {
                x_[j] = ub_[j];
                state_[j] = VarState::AtUpper;
            } else {
                state_[j] = VarState::Free;
            }
        }
        head_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            head_[i] = n_ + i;
            state_[n_ + i] = VarState::Basic;
        }
        binv_ = -Matrix::Identity(m_, m_);
        recompute_basics();
    }

    void recompute_basics()
    {
        Vector r = Vector::Zero(m_);
        for (int j = 0; j < total_; ++j)
            if (state_[j] != VarState::Basic && x_[j] != 0.0)
                r += x_[j] * column(j);
        const Vector xb = -binv_ * r;
        for (int i = 0; i < m_; ++i)
            x_[head_[i]] = xb[i];
    }

    bool refactor()
    {
        Matrix basis(m_, m_);
        for (int i = 0; i < m_; ++i)
            basis.col(i) = column(head_[i]);
        Eigen::PartialPivLU<Matrix> lu(basis);
        if (!(lu.rcond() > 1e-13))
            return false;
        binv_ = lu.inverse();
        since_refactor_ = 0;
        recompute_basics();
        return true;
    }

    // Effective bounds of a basic variable during the ratio test.
    std::pair<double, double> basic_bounds(int b, int ph) const
    {
        if (ph == 1) {
            if (x_[b] < lb_[b] - opt_.feasibility_tol)
                return {-kInfinity, lb_[b]};
            if (x_[b] > ub_[b] + opt_.feasibility_tol)
                return {ub_[b], kInfinity};
        }
        return {lb_[b], ub_[b]};
    }

    Vector basic_costs(int ph, double &infeasibility) const
    {
        Vector c = Vector::Zero(m_);
        infeasibility = 0.0;
        for (int i = 0; i < m_; ++i) {
            const int b = head_[i];
            if (ph == 1) {
                if (x_[b] < lb_[b] - opt_.feasibility_tol) {
                    c[i] = -1.0;
                    infeasibility += lb_[b] - x_[b];
                } else if (x_[b] > ub_[b] + opt_.feasibility_tol) {
                    c[i] = 1.0;
                    infeasibility += x_[b] - ub_[b];
                }
            } else if (b < n_) {
                c[i] = lp_.objective[b];
            }
        }
        return c;
    }

    // Entering variable and its direction, or -1.
    std::pair<int, int> price(const Vector &y, int ph, bool bland)
    {
        const double dtol = opt_.feasibility_tol;
        int best = -1;
        int best_dir = 0;
        double best_score = 0.0;
        const int block = std::max(64, total_ / 4);
        int scanned_after_hit = 0;
        for (int k = 0; k < total_; ++k) {
            const int j = bland ? k : (price_start_ + k) % total_;
            if (state_[j] == VarState::Basic || lb_[j] == ub_[j])
                continue;
            const double c = (ph == 2 && j < n_) ? lp_.objective[j] : 0.0;
            const double d = c - dot_column(y, j);
            int dir = 0;
            if (d < -dtol && (state_[j] == VarState::AtLower || state_[j] == VarState::Free))
                dir = 1;
            else if (d > dtol && (state_[j] == VarState::AtUpper || state_[j] == VarState::Free))
                dir = -1;
            if (dir == 0)
                continue;
            if (bland)
                return {j, dir};
            if (std::abs(d) > best_score) {
                best = j;
                best_dir = dir;
                best_score = std::abs(d);
            }
            if (++scanned_after_hit >= block)
                break;
        }
        if (best >= 0)
            price_start_ = (best + 1) % total_;
        return {best, best_dir};
    }

    bool phase(int ph, LpResult &res)
    {
        const long degenerate_limit = 2L * (m_ + n_);
        long degenerate = 0;
        bool bland = false;
        for (;;) {
            if (iterations_ >= limit_) {
                res.status = LpStatus::Unknown;
                res.message = "iteration limit";
                res.iterations = iterations_;
                return false;
            }
            double infeasibility = 0.0;
            const Vector cb = basic_costs(ph, infeasibility);
            if (ph == 1 && cb.isZero(0.0))
                return true;
            const Vector y = binv_.transpose() * cb;
            const auto [q, dir] = price(y, ph, bland);
            if (q < 0) {
                if (ph == 2)
                    return true;
                // Confirm on a fresh factorization before trusting the certificate.
                if (since_refactor_ > 0) {
                    if (!refactor())
                        return numerical(res, "singular basis");
                    continue;
                }
                res.iterations = iterations_;
                if (check_farkas(lp_, y)) {
                    res.status = LpStatus::Infeasible;
                    res.certificate = y;
                } else {
                    res.status = LpStatus::Unknown;
                    res.message = "phase 1 stalled without a valid certificate";
                }
                return false;
            }

            const Vector alpha = binv_ * column(q);
            const Vector delta = -static_cast<double>(dir) * alpha;

            double t = ub_[q] - lb_[q];  // bound flip
            int leave = -1;
            double leave_piv = 0.0;
            for (int i = 0; i < m_; ++i) {
                if (std::abs(delta[i]) <= opt_.pivot_tol)
                    continue;
                const int b = head_[i];
                const auto [blo, bhi] = basic_bounds(b, ph);
                double lim = kInfinity;
                if (delta[i] > 0.0 && std::isfinite(bhi))
                    lim = (bhi - x_[b]) / delta[i];
                else if (delta[i] < 0.0 && std::isfinite(blo))
                    lim = (blo - x_[b]) / delta[i];
                if (!std::isfinite(lim))
                    continue;
                lim = std::max(lim, 0.0);
                const bool tie = leave >= 0 && std::abs(lim - t) <= 1e-12 * std::max(1.0, std::abs(t));
                bool take = lim < t && !tie;
                if (tie)
                    take = bland ? b < head_[leave] : std::abs(delta[i]) > leave_piv;
                if (take) {
                    t = lim;
                    leave = i;
                    leave_piv = std::abs(delta[i]);
                }
            }
            if (!std::isfinite(t)) {
                res.iterations = iterations_;
                if (ph == 2) {
                    res.status = LpStatus::Unbounded;
                    return false;
                }
                return numerical(res, "unbounded phase-1 ray");
            }
            ++iterations_;
            degenerate = t <= 1e-12 ? degenerate + 1 : 0;
            if (degenerate > degenerate_limit)
                bland = true;

            x_[q] += dir * t;
            for (int i = 0; i < m_; ++i)
                x_[head_[i]] += delta[i] * t;

            if (leave < 0) {
                state_[q] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
                x_[q] = dir > 0 ? ub_[q] : lb_[q];
                continue;
            }
            const int b = head_[leave];
            if (delta[leave] > 0.0) {
                // Moved up onto an upper bound; an infeasible-below basic stops at its lower bound.
                const bool was_below = ph == 1 && x_[b] - delta[leave] * t < lb_[b] - opt_.feasibility_tol;
                x_[b] = was_below ? lb_[b] : ub_[b];
                state_[b] = was_below ? VarState::AtLower : VarState::AtUpper;
            } else {
                const bool was_above = ph == 1 && x_[b] - delta[leave] * t > ub_[b] + opt_.feasibility_tol;
                x_[b] = was_above ? ub_[b] : lb_[b];
                state_[b] = was_above ? VarState::AtUpper : VarState::AtLower;
            }
            if (std::isinf(x_[b])) {
                x_[b] = 0.0;
                state_[b] = VarState::Free;
            }
            head_[leave] = q;
            state_[q] = VarState::Basic;

            const double piv = alpha[leave];
            binv_.row(leave) /= piv;
            for (int i = 0; i < m_; ++i)
                if (i != leave && alpha[i] != 0.0)
                    binv_.row(i) -= alpha[i] * binv_.row(leave);
            if (++since_refactor_ >= opt_.refactor_every && !refactor())
                return numerical(res, "singular basis");
        }
    }

    bool numerical(LpResult &res, const char *why)
    {
        res.status = LpStatus::Unknown;
        res.message = why;
        res.iterations = iterations_;
        return false;
    }

    LpResult finish(LpResult &res, bool has_objective)
    {
        res.iterations = iterations_;
        Vector x = x_.head(n_);
        if (lp_.max_violation(x) > opt_.residual_tol) {
            if (!refactor())
                return numerical(res, "singular basis"), res;
            x = x_.head(n_);
            if (lp_.max_violation(x) > opt_.residual_tol)
                return numerical(res, "residual check failed"), res;
        }
        res.status = LpStatus::Optimal;
        res.x = std::move(x);
        res.value = has_objective ? lp_.objective.dot(res.x) : 0.0;
        return res;
    }
};

}  // namespace

LpResult lp_solve(const LinearProgram &lp, const LpOptions &options)
{
    if (lp.hi.size() != lp.lo.size() || lp.A.cols() != lp.lo.size() || lp.row_lo.size() != lp.A.rows() ||
        lp.row_hi.size() != lp.A.rows())
        throw Error("lp_solve: inconsistent dimensions");
    if (lp.objective.size() != 0 && lp.objective.size() != lp.lo.size())
        throw Error("lp_solve: objective has the wrong length");
    if (!lp.A.allFinite() || (lp.objective.size() && !lp.objective.allFinite()))
        throw Error("lp_solve: non-finite coefficient");
    Simplex s(lp, options);
    return s.run();
}

}  // namespace sigverify
