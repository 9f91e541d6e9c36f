#pragma once

#include "sigverify/common.hpp"
#include "sigverify/problem.hpp"
#include "sigverify/sshaped.hpp"

#include <vector>

namespace sigverify {

/// f(a) + f'(a)(x - a)
Line tangent_line(const SShapedFamily &family, double a);

/// Line through (a, f(a)) and (b, f(b)); requires a < b.
Line secant_line(const SShapedFamily &family, double a, double b);

struct SShapedRelaxation {
    Line lower;
    Line upper;
    /// The interval reached past ±kSShapedClamp; the affected side was widened to the output range.
    bool clamped = false;
};

/// Two parallel lines with slope min(f'(l), f'(u)), the lower one through
/// (l, f(l)) and the upper one through (u, f(u)).
SShapedRelaxation initial_sshaped_relaxation(const SShapedFamily &family, Interval iv);

/// Linear lower/upper bounds of one activation neuron over its input interval.
struct NeuronRelaxation {
    Line lower;
    Line upper;
    bool clamped = false;
};

/// Affine bounds over the network input, valid on the whole input box.
struct SymbolicBound {
    Eigen::RowVectorXd lower;
    double lower_constant = 0.0;
    Eigen::RowVectorXd upper;
    double upper_constant = 0.0;
    Interval concrete;

    double lower_at(const Vector &x) const { return lower.dot(x) + lower_constant; }
    double upper_at(const Vector &x) const { return upper.dot(x) + upper_constant; }
};

struct BoundsResult {
    InputBox box;
    std::vector<Interval> intervals;       // per variable
    std::vector<SymbolicBound> symbolic;   // per variable
    /// relaxations[i][n]: bounds used for neuron n of network layer i (empty for affine layers).
    std::vector<std::vector<NeuronRelaxation>> relaxations;

    const Interval &operator[](VariableId id) const { return intervals[id.index]; }
};

/// Interval arithmetic intersected with DeepPoly-style back-substitution to the input.
BoundsResult propagate_bounds(const VerificationTuple &tuple, const InputBox &input_box);

/// Relaxation of a single activation neuron for an input interval.
NeuronRelaxation relax_activation(const ActivationKind &kind, Interval iv);

/// Sound lower bound of coefficients · outputs over the input box, obtained by
/// back-substituting the linear form through every layer.
double lower_bound_of_output_form(const VerificationTuple &tuple, const BoundsResult &bounds, const Vector &coefficients);

}  // namespace sigverify
