#pragma once

#include "sigverify/bounds.hpp"
#include "sigverify/common.hpp"
#include "sigverify/network.hpp"
#include "sigverify/problem.hpp"
#include "sigverify/sshaped.hpp"

#include <array>
#include <atomic>
#include <memory>
#include <vector>

namespace sigverify {

/// Lower: v̂ >= h(v). Upper: v̂ <= h(v).
enum class BoundDirection { Lower, Upper };

/// Which tangent/secant combination produced a two-segment bound. The numbering
/// follows the soundness argument for the lower-bound recipe; the upper-bound
/// recipe is the point reflection of the lower one and reuses the same labels.
enum class SlopeCase {
    Fallback = 0,        // derivative extrema, used when a recipe output fails validation
    TangentMinSlope = 1,  // p <= η < u, secant too steep: β tangent, γ = min(f'(p), f'(u))
    TangentSecant = 2,    // p <= η < u: β tangent, γ = secant(p, u)
    Construction = 3,     // l < η < p: β from the reference line, γ = secant(p, u)
    SecantSecant = 4,     // η <= l: both secants
    TangentTangent = 5,   // u <= η: a single tangent line
};
inline constexpr int kSlopeCaseCount = 6;

const char *slope_case_name(SlopeCase c);

struct SlopeChoice {
    double left_slope = 0.0;   // β, used for x <= p
    double right_slope = 0.0;  // γ, used for x > p
    BoundDirection direction = BoundDirection::Lower;
    SlopeCase slope_case = SlopeCase::Fallback;
};

/// Slopes of a two-segment bound anchored at (p, f(p)) that stays on one side of
/// f over [l, u] and excludes (p, q). Throws NoSeparationError when q is within
/// `tol` of f(p) or no positive slopes exist.
SlopeChoice get_slopes(const SShapedFamily &family, double l, double u, double p, double q, double tol = kTolAct,
                       bool grid_check = false);

/// Grid check that `h` stays on its side of `family` over [l, u].
template <typename Bound>
bool grid_sound(const SShapedFamily &family, Interval iv, const Bound &h, BoundDirection direction,
                int points = 1001, double slack = 1e-9)
{
    for (int i = 0; i < points; ++i) {
        const double x = points == 1 ? iv.lo : iv.lo + (iv.hi - iv.lo) * i / (points - 1);
        const double gap = direction == BoundDirection::Lower ? family.value(x) - h(x) : h(x) - family.value(x);
        if (!(gap >= -slack))
            return false;
    }
    return true;
}

/// Process-wide switch read from SIGVERIFY_DEBUG_GRIDCHECK.
bool grid_check_from_environment();

struct LinearPiece {
    Interval domain;
    Line line;
};

/// Disjunctive piecewise-linear bound: (v, v̂) is admitted when some piece whose
/// domain contains v has v̂ on the right side of its line.
struct PiecewiseChain {
    BoundDirection direction = BoundDirection::Lower;
    std::vector<LinearPiece> pieces;

    /// Weakest bound value at x over the pieces whose domain contains x.
    double value(double x) const;
    bool admits(double x, double y, double tol = 0.0) const;
    /// Continuous and convex (lower) / concave (upper): encodable without case splits.
    bool is_convex() const;
    /// Edges of the convex (lower) or concave (upper) envelope of the chain over `iv`.
    std::vector<Line> envelope(Interval iv) const;
};

/// h(x) = f(p) + β(x − p) for x <= p, f(p) + γ(x − p) for x > p.
struct PiecewiseLinearBound {
    int neuron = -1;  // index into AbstractModel::neurons
    double anchor = 0.0;
    double anchor_value = 0.0;  // f(anchor), stored rather than recomputed
    double left_slope = 0.0;
    double right_slope = 0.0;
    BoundDirection direction = BoundDirection::Lower;
    SlopeCase slope_case = SlopeCase::Fallback;

    double operator()(double x) const
    {
        return anchor_value + (x <= anchor ? left_slope : right_slope) * (x - anchor);
    }
    bool admits(double x, double y, double tol = 0.0) const
    {
        return direction == BoundDirection::Lower ? y >= (*this)(x) - tol : y <= (*this)(x) + tol;
    }
    PiecewiseChain as_chain() const;
};

/// Builds the separating bound for the point (p, q) of `neuron`.
PiecewiseLinearBound make_pl_bound(const SShapedFamily &family, Interval iv, int neuron, double p, double q,
                                   double tol = kTolAct, bool grid_check = false);

struct SShapedNeuron {
    int activation = -1;  // index into tuple.activations
    VariableId input;
    VariableId output;
    SShapedKind kind = SShapedKind::Sigmoid;
    Interval interval;
    Line lower;
    Line upper;
    bool clamped = false;
    std::vector<PiecewiseLinearBound> refinements;
    std::vector<PiecewiseChain> eager;

    SShapedFamily family() const { return SShapedFamily::of(kind); }
    Interval output_interval() const;
};

/// M′: the tuple with every S-shaped constraint replaced by linear and
/// piecewise-linear bounds. ReLU and LeakyReLU constraints are kept exactly.
struct AbstractModel {
    std::shared_ptr<const VerificationTuple> tuple;
    std::vector<Interval> intervals;  // per variable
    std::vector<SShapedNeuron> neurons;
    std::vector<int> piecewise_activations;  // ReLU/LeakyReLU entries of tuple.activations
    int generation = 0;

    std::size_t num_refinements() const;
};

AbstractModel abstr(std::shared_ptr<const VerificationTuple> tuple, const BoundsResult &bounds);

/// Appends a refinement bound; the generation counter is left unchanged.
AbstractModel add_pl_bound(AbstractModel model, const PiecewiseLinearBound &bound, bool grid_check = false);

struct AbstractViolation {
    enum class Kind { Linear, VariableBound, SShapedLine, Refinement, Eager, Activation };
    Kind kind;
    int index;      // constraint, variable, neuron or activation index
    int sub = -1;   // bound index within a neuron
    double amount;  // size of the violation
};

/// Constraints of `model` (network equalities, Φ_in, variable bounds, relaxations,
/// exact piecewise-linear activations) that `alpha` breaks by more than `tol`.
std::vector<AbstractViolation> abstract_violations(const AbstractModel &model, const Assignment &alpha,
                                                   double tol = kTolLp);

/// h(x) = γ r_α(x − p) + f(p) with α = β/γ, plus the slack a4 that turns the
/// equality into the half-space v̂ <= h(v) (upper) or v̂ >= h(v) (lower).
struct LeakyReluGadget {
    double anchor = 0.0;
    double anchor_value = 0.0;
    double gamma = 1.0;
    double alpha = 1.0;
    BoundDirection direction = BoundDirection::Lower;

    struct Trace {
        double a1;  // x − p
        double a2;  // r_α(a1)
        double a3;  // γ a2 + f(p)
    };
    Trace trace(double x) const;
    double value(double x) const { return trace(x).a3; }
    /// a4 = y − a3 must be <= 0 for upper bounds and >= 0 for lower bounds.
    bool admits(double x, double y, double tol = 0.0) const;
    /// 1 → 1 network: affine(x − p), leaky_relu(α), affine(γ · + f(p)).
    Network as_network() const;
};

LeakyReluGadget leaky_relu_encoding(const PiecewiseLinearBound &bound);

struct EagerChains {
    PiecewiseChain lower;
    PiecewiseChain upper;
};

/// K-segment lower and upper chains with evenly spaced breakpoints l + j(u − l)/K.
EagerChains eager_abstraction(const SShapedFamily &family, Interval iv, int K);

/// Adds eager K-segment chains to every non-degenerate S-shaped neuron.
AbstractModel with_eager_chains(AbstractModel model, int K);

/// Counters for the slope recipe; used by tests and the trace.
struct SlopeStatistics {
    std::array<std::atomic<long>, kSlopeCaseCount> hits{};
    std::atomic<long> grid_failures{0};

    void reset();
    long operator[](SlopeCase c) const { return hits[static_cast<int>(c)].load(); }
};
SlopeStatistics &slope_statistics();

}  // namespace sigverify
