#include "sigverify/bounds.hpp"

namespace sigverify {

Line tangent_line(const SShapedFamily &family, double a)
{
    return Line::through(a, family.value(a), family.derivative(a));
}

Line secant_line(const SShapedFamily &family, double a, double b)
{
    if (!(a < b))
        throw Error("secant_line requires a < b");
    const double fa = family.value(a);
    return Line::through(a, fa, (family.value(b) - fa) / (b - a));
}

SShapedRelaxation initial_sshaped_relaxation(const SShapedFamily &family, Interval iv)
{
    const Interval range = family.output_range();
    const bool clamp_lo = iv.lo < -kSShapedClamp;
    const bool clamp_hi = iv.hi > kSShapedClamp;
    if (clamp_lo || clamp_hi) {
        const double lo = clamp_lo ? range.lo : family.value(iv.lo);
        const double hi = clamp_hi ? range.hi : family.value(iv.hi);
        return {{0.0, lo}, {0.0, hi}, true};
    }
    if (iv.width() < kDegenerateWidth)
        return {{0.0, family.value(iv.lo)}, {0.0, family.value(iv.hi)}, false};
    const double slope = family.min_derivative(iv.lo, iv.hi);
    return {Line::through(iv.lo, family.value(iv.lo), slope), Line::through(iv.hi, family.value(iv.hi), slope),
            false};
}

namespace {

// Relaxation of x ↦ (x > 0 ? x : s x) on [l, u] with l < 0 < u.
NeuronRelaxation relax_two_slope(double s, Interval iv)
{
    const double l = iv.lo;
    const double u = iv.hi;
    const Line chord = Line::through(l, s * l, (u - s * l) / (u - l));
    const Line tight = u > -l ? Line{1.0, 0.0} : Line{s, 0.0};
    if (s <= 1.0)
        return {tight, chord, false};
    return {chord, tight, false};
}

}  // namespace

NeuronRelaxation relax_activation(const ActivationKind &kind, Interval iv)
{
    return std::visit(
        [&](const auto &k) -> NeuronRelaxation {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, SShapedActivation>) {
                const auto r = initial_sshaped_relaxation(SShapedFamily::of(k.family), iv);
                return {r.lower, r.upper, r.clamped};
            } else {
                double s = 0.0;
                if constexpr (std::is_same_v<T, LeakyReluKind>)
                    s = k.slope;
                if (iv.lo >= 0.0)
                    return {{1.0, 0.0}, {1.0, 0.0}, false};
                if (iv.hi <= 0.0)
                    return {{s, 0.0}, {s, 0.0}, false};
                return relax_two_slope(s, iv);
            }
        },
        kind);
}

namespace {

struct LinearForm {
    Matrix coeffs;  // rows: expressions, cols: values entering the current layer
    Vector constant;
};

// Back-substitutes `form`, expressed over the values entering layer `layer`,
// down to the network input. `lower` selects the bound direction.
LinearForm back_substitute(const Network &net, const std::vector<std::vector<NeuronRelaxation>> &relaxations,
                           LinearForm form, int layer, bool lower)
{
    for (int t = layer - 1; t >= 0; --t) {
        const Layer &l = net.layers()[t];
        if (const auto *affine = std::get_if<AffineLayer>(&l)) {
            form.constant += form.coeffs * affine->bias;
            form.coeffs = form.coeffs * affine->weights;
            continue;
        }
        const auto &relax = relaxations[t];
        const Eigen::Index d = form.coeffs.cols();
        Vector lo_slope(d), lo_icpt(d), hi_slope(d), hi_icpt(d);
        for (Eigen::Index n = 0; n < d; ++n) {
            lo_slope[n] = relax[n].lower.slope;
            lo_icpt[n] = relax[n].lower.intercept;
            hi_slope[n] = relax[n].upper.slope;
            hi_icpt[n] = relax[n].upper.intercept;
        }
        const Matrix pos = form.coeffs.cwiseMax(0.0);
        const Matrix neg = form.coeffs.cwiseMin(0.0);
        if (lower) {
            form.constant += pos * lo_icpt + neg * hi_icpt;
            form.coeffs = pos * lo_slope.asDiagonal() + neg * hi_slope.asDiagonal();
        } else {
            form.constant += pos * hi_icpt + neg * lo_icpt;
            form.coeffs = pos * hi_slope.asDiagonal() + neg * lo_slope.asDiagonal();
        }
    }
    return form;
}

Vector concretize_lower(const LinearForm &form, const InputBox &box)
{
    return form.coeffs.cwiseMax(0.0) * box.lo + form.coeffs.cwiseMin(0.0) * box.hi + form.constant;
}

Vector concretize_upper(const LinearForm &form, const InputBox &box)
{
    return form.coeffs.cwiseMax(0.0) * box.hi + form.coeffs.cwiseMin(0.0) * box.lo + form.constant;
}

}  // namespace

BoundsResult propagate_bounds(const VerificationTuple &tuple, const InputBox &box)
{
    const Network &net = *tuple.network;
    if (box.dim() != net.input_dim())
        throw DimensionError(0, "input box dimension mismatch");
    if (!box.lo.allFinite() || !box.hi.allFinite())
        throw Error("input box must be finite");

    const Eigen::Index n0 = net.input_dim();
    BoundsResult result;
    result.box = box;
    result.intervals.assign(tuple.num_variables(), Interval{});
    result.symbolic.assign(tuple.num_variables(), SymbolicBound{});
    result.relaxations.resize(net.size());

    // Values entering the current layer.
    Vector lo = box.lo;
    Vector hi = box.hi;
    LinearForm sym_lo{Matrix::Identity(n0, n0), Vector::Zero(n0)};
    LinearForm sym_hi = sym_lo;

    auto store = [&](const std::vector<VariableId> &ids) {
        for (std::size_t n = 0; n < ids.size(); ++n) {
            const auto i = static_cast<Eigen::Index>(n);
            SymbolicBound &s = result.symbolic[ids[n].index];
            s.lower = sym_lo.coeffs.row(i);
            s.lower_constant = sym_lo.constant[i];
            s.upper = sym_hi.coeffs.row(i);
            s.upper_constant = sym_hi.constant[i];
            s.concrete = {lo[i], hi[i]};
            result.intervals[ids[n].index] = s.concrete;
        }
    };
    store(tuple.layer_values[0]);

    for (std::size_t li = 0; li < net.size(); ++li) {
        const int layer = static_cast<int>(li);
        const Layer &l = net.layers()[li];
        if (const auto *affine = std::get_if<AffineLayer>(&l)) {
            const Vector center = (lo + hi) / 2.0;
            const Vector radius = (hi - lo) / 2.0;
            Vector ia_lo = affine->weights * center - affine->weights.cwiseAbs() * radius + affine->bias;
            Vector ia_hi = affine->weights * center + affine->weights.cwiseAbs() * radius + affine->bias;

            LinearForm form{affine->weights, affine->bias};
            sym_lo = back_substitute(net, result.relaxations, form, layer, true);
            sym_hi = back_substitute(net, result.relaxations, form, layer, false);
            lo = ia_lo.cwiseMax(concretize_lower(sym_lo, box));
            hi = ia_hi.cwiseMin(concretize_upper(sym_hi, box));
            // Rounding can cross the two sides on degenerate boxes.
            for (Eigen::Index i = 0; i < lo.size(); ++i)
                if (lo[i] > hi[i])
                    std::swap(lo[i], hi[i]);
        } else {
            const int first = tuple.activation_of_layer[li];
            auto &relax = result.relaxations[li];
            relax.resize(static_cast<std::size_t>(lo.size()));
            Vector new_lo(lo.size());
            Vector new_hi(hi.size());
            for (Eigen::Index n = 0; n < lo.size(); ++n) {
                const auto &act = tuple.activations[first + n];
                relax[n] = relax_activation(act.kind, {lo[n], hi[n]});
                new_lo[n] = act.apply(lo[n]);
                new_hi[n] = act.apply(hi[n]);
                // Post-activation symbolic bounds: every relaxation slope is >= 0.
                sym_lo.coeffs.row(n) *= relax[n].lower.slope;
                sym_lo.constant[n] = sym_lo.constant[n] * relax[n].lower.slope + relax[n].lower.intercept;
                sym_hi.coeffs.row(n) *= relax[n].upper.slope;
                sym_hi.constant[n] = sym_hi.constant[n] * relax[n].upper.slope + relax[n].upper.intercept;
            }
            LinearForm one_lo{sym_lo.coeffs, sym_lo.constant};
            LinearForm one_hi{sym_hi.coeffs, sym_hi.constant};
            lo = new_lo.cwiseMax(concretize_lower(one_lo, box)).cwiseMin(new_hi);
            hi = new_hi.cwiseMin(concretize_upper(one_hi, box)).cwiseMax(lo);
        }
        store(tuple.layer_values[li + 1]);
    }
    return result;
}

double lower_bound_of_output_form(const VerificationTuple &tuple, const BoundsResult &bounds, const Vector &coefficients)
{
    const Network &net = *tuple.network;
    if (coefficients.size() != net.output_dim())
        throw DimensionError(static_cast<int>(net.size()), "output form has the wrong arity");
    LinearForm form{coefficients.transpose(), Vector::Zero(1)};
    form = back_substitute(net, bounds.relaxations, form, static_cast<int>(net.size()), true);
    const double symbolic = concretize_lower(form, bounds.box)[0];

    // Interval fallback on the outputs themselves.
    double interval = 0.0;
    for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
        const Interval &iv = bounds[tuple.outputs[i]];
        interval += coefficients[i] >= 0.0 ? coefficients[i] * iv.lo : coefficients[i] * iv.hi;
    }
    return std::max(symbolic, interval);
}

}  // namespace sigverify
