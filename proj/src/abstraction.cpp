#include "sigverify/abstraction.hpp"

#include <cstdlib>
#include <iostream>

namespace sigverify {

const char *slope_case_name(SlopeCase c)
{
    switch (c) {
    case SlopeCase::Fallback:
        return "fallback";
    case SlopeCase::TangentMinSlope:
        return "tangent/min-slope";
    case SlopeCase::TangentSecant:
        return "tangent/secant";
    case SlopeCase::Construction:
        return "construction";
    case SlopeCase::SecantSecant:
        return "secant/secant";
    case SlopeCase::TangentTangent:
        return "tangent/tangent";
    }
    return "?";
}

SlopeStatistics &slope_statistics()
{
    static SlopeStatistics stats;
    return stats;
}

void SlopeStatistics::reset()
{
    for (auto &h : hits)
        h.store(0);
    grid_failures.store(0);
}

bool grid_check_from_environment()
{
    static const bool enabled = [] {
        const char *v = std::getenv("SIGVERIFY_DEBUG_GRIDCHECK");
        return v != nullptr && *v != '\0' && std::string(v) != "0";
    }();
    return enabled;
}

namespace {

struct RecipeOutput {
    double beta;
    double gamma;
    SlopeCase slope_case;
};

// Lower-bound recipe for an increasing function that is convex below `eta`
// and concave above it. `f` and `df` are the value and derivative.
template <typename F, typename DF>
RecipeOutput lower_recipe(F f, DF df, double eta, double l, double u, double p)
{
    auto secant_or = [&](double a, double b, double fallback) {
        return b - a > kDegenerateWidth ? (f(b) - f(a)) / (b - a) : fallback;
    };

    if (u <= eta) {
        const double d = df(p);
        return {d, d, SlopeCase::TangentTangent};
    }
    if (l >= eta)
        return {secant_or(l, p, df(l)), secant_or(p, u, df(u)), SlopeCase::SecantSecant};
    if (p <= eta) {
        const double tangent = df(p);
        const double s = secant_or(p, u, df(u));
        if (s <= tangent)
            return {tangent, s, SlopeCase::TangentSecant};
        return {tangent, std::min(tangent, df(u)), SlopeCase::TangentMinSlope};
    }

    // l < eta < p. The curve on [l, p] lies above both the reference line
    // through (l, f(l)) with the smallest derivative and the chord from
    // (eta, L(eta)) to (p, f(p)); β is the steeper of the two chords back
    // from p. Any slope >= max f' on [l, p] is also valid, so keep the smaller.
    const double c = std::min(df(l), df(u));
    const double ref_eta = f(l) + c * (eta - l);
    const double fp = f(p);
    double beta = df(eta);
    if (p - eta > kDegenerateWidth) {
        double construct = (fp - ref_eta) / (p - eta);
        if (p - l > kDegenerateWidth)
            construct = std::max(construct, (fp - f(l)) / (p - l));
        beta = std::min(beta, construct);
    }
    return {beta, secant_or(p, u, df(u)), SlopeCase::Construction};
}

bool usable(double slope) { return std::isfinite(slope) && slope > 0.0; }

}  // namespace

SlopeChoice get_slopes(const SShapedFamily &family, double l, double u, double p, double q, double tol,
                       bool grid_check)
{
    if (!(l <= p && p <= u) || !std::isfinite(l) || !std::isfinite(u))
        throw Error("get_slopes: anchor " + std::to_string(p) + " outside [" + std::to_string(l) + ", " +
                    std::to_string(u) + "]");
    const double fp = family.value(p);
    if (!(std::abs(q - fp) > tol))
        throw NoSeparationError("point lies within tolerance of the curve");
    const double eta = family.inflection();

    SlopeChoice out;
    out.direction = q < fp ? BoundDirection::Lower : BoundDirection::Upper;
    RecipeOutput r;
    if (out.direction == BoundDirection::Lower) {
        r = lower_recipe([&](double x) { return family.value(x); }, [&](double x) { return family.derivative(x); },
                         eta, l, u, p);
        out.left_slope = r.beta;
        out.right_slope = r.gamma;
    } else {
        // g(x) = −f(2η − x) is again S-shaped around η; its lower bounds are
        // the mirror images of upper bounds of f, with the two sides swapped.
        r = lower_recipe([&](double x) { return -family.value(2 * eta - x); },
                         [&](double x) { return family.derivative(2 * eta - x); }, eta, 2 * eta - u, 2 * eta - l,
                         2 * eta - p);
        out.left_slope = r.gamma;
        out.right_slope = r.beta;
    }
    out.slope_case = r.slope_case;

    bool ok = usable(out.left_slope) && usable(out.right_slope);
    if (ok && grid_check) {
        const PiecewiseLinearBound h{-1, p, fp, out.left_slope, out.right_slope, out.direction, out.slope_case};
        if (!grid_sound(family, {l, u}, h, out.direction)) {
            ok = false;
            slope_statistics().grid_failures.fetch_add(1);
            std::cerr << "sigverify: grid check failed for " << slope_case_name(out.slope_case) << " bound on ["
                      << l << ", " << u << "] at p=" << p << "; using derivative extrema\n";
        }
    }
    if (!ok) {
        // Derivative extrema on each side of p are valid slopes in every case.
        if (out.direction == BoundDirection::Lower) {
            out.left_slope = family.max_derivative(l, p);
            out.right_slope = family.min_derivative(p, u);
        } else {
            out.left_slope = family.min_derivative(l, p);
            out.right_slope = family.max_derivative(p, u);
        }
        out.slope_case = SlopeCase::Fallback;
        if (!usable(out.left_slope) || !usable(out.right_slope))
            throw NoSeparationError("derivative underflow: no positive slopes on the interval");
    }

    const PiecewiseLinearBound h{-1, p, fp, out.left_slope, out.right_slope, out.direction, out.slope_case};
    const double margin = out.direction == BoundDirection::Lower ? h(p) - q : q - h(p);
    if (!(margin >= kTolSepRel * std::max(1.0, std::abs(q))))
        throw NoSeparationError("separation margin too small");

    slope_statistics().hits[static_cast<int>(out.slope_case)].fetch_add(1);
    return out;
}

double PiecewiseChain::value(double x) const
{
    double best = direction == BoundDirection::Lower ? kInfinity : -kInfinity;
    for (const auto &piece : pieces) {
        if (!piece.domain.contains(x))
            continue;
        const double y = piece.line(x);
        best = direction == BoundDirection::Lower ? std::min(best, y) : std::max(best, y);
    }
    return best;
}

bool PiecewiseChain::admits(double x, double y, double tol) const
{
    for (const auto &piece : pieces) {
        if (!piece.domain.contains(x, tol))
            continue;
        const double h = piece.line(x);
        if (direction == BoundDirection::Lower ? y >= h - tol : y <= h + tol)
            return true;
    }
    return false;
}

bool PiecewiseChain::is_convex() const
{
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
        const LinearPiece &a = pieces[i];
        const LinearPiece &b = pieces[i + 1];
        if (a.domain.hi != b.domain.lo)
            return false;
        const double x = a.domain.hi;
        if (std::abs(a.line(x) - b.line(x)) > 1e-12 * std::max(1.0, std::abs(a.line(x))))
            return false;
        if (direction == BoundDirection::Lower ? a.line.slope > b.line.slope : a.line.slope < b.line.slope)
            return false;
    }
    return true;
}

std::vector<Line> PiecewiseChain::envelope(Interval iv) const
{
    struct Point {
        double x, y;
    };
    std::vector<Point> pts;
    for (const auto &piece : pieces) {
        const double a = std::max(piece.domain.lo, iv.lo);
        const double b = std::min(piece.domain.hi, iv.hi);
        if (a > b)
            continue;
        pts.push_back({a, piece.line(a)});
        pts.push_back({b, piece.line(b)});
    }
    if (pts.empty())
        return {};
    const bool lower = direction == BoundDirection::Lower;
    // Per x keep only the weakest value, then run a monotone-chain hull.
    std::sort(pts.begin(), pts.end(), [lower](const Point &a, const Point &b) {
        return a.x < b.x || (a.x == b.x && (lower ? a.y < b.y : a.y > b.y));
    });
    std::vector<Point> uniq;
    for (const auto &pt : pts)
        if (uniq.empty() || uniq.back().x != pt.x)
            uniq.push_back(pt);
    if (uniq.size() == 1)
        return {{0.0, uniq.front().y}};

    std::vector<Point> hull;
    for (const auto &pt : uniq) {
        while (hull.size() >= 2) {
            const Point &o = hull[hull.size() - 2];
            const Point &a = hull.back();
            const double cross = (a.x - o.x) * (pt.y - o.y) - (a.y - o.y) * (pt.x - o.x);
            if (lower ? cross <= 0.0 : cross >= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(pt);
    }
    std::vector<Line> lines;
    for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
        const double slope = (hull[i + 1].y - hull[i].y) / (hull[i + 1].x - hull[i].x);
        lines.push_back(Line::through(hull[i].x, hull[i].y, slope));
    }
    return lines;
}

PiecewiseChain PiecewiseLinearBound::as_chain() const
{
    return {direction,
            {{{-kInfinity, anchor}, Line::through(anchor, anchor_value, left_slope)},
             {{anchor, kInfinity}, Line::through(anchor, anchor_value, right_slope)}}};
}

PiecewiseLinearBound make_pl_bound(const SShapedFamily &family, Interval iv, int neuron, double p, double q,
                                   double tol, bool grid_check)
{
    const SlopeChoice s = get_slopes(family, iv.lo, iv.hi, p, q, tol, grid_check);
    return {neuron, p, family.value(p), s.left_slope, s.right_slope, s.direction, s.slope_case};
}

Interval SShapedNeuron::output_interval() const
{
    const SShapedFamily f = family();
    return {f.value(interval.lo), f.value(interval.hi)};
}

std::size_t AbstractModel::num_refinements() const
{
    std::size_t n = 0;
    for (const auto &neuron : neurons)
        n += neuron.refinements.size();
    return n;
}

AbstractModel abstr(std::shared_ptr<const VerificationTuple> tuple, const BoundsResult &bounds)
{
    if (!tuple)
        throw Error("abstr: null tuple");
    if (static_cast<int>(bounds.intervals.size()) != tuple->num_variables())
        throw Error("abstr: bounds cover " + std::to_string(bounds.intervals.size()) + " of " +
                    std::to_string(tuple->num_variables()) + " variables");
    AbstractModel model;
    model.intervals = bounds.intervals;
    for (std::size_t i = 0; i < tuple->activations.size(); ++i) {
        const ActivationConstraint &act = tuple->activations[i];
        const auto *s = std::get_if<SShapedActivation>(&act.kind);
        if (s == nullptr) {
            model.piecewise_activations.push_back(static_cast<int>(i));
            continue;
        }
        SShapedNeuron neuron;
        neuron.activation = static_cast<int>(i);
        neuron.input = act.input;
        neuron.output = act.output;
        neuron.kind = s->family;
        neuron.interval = bounds[act.input];
        if (!std::isfinite(neuron.interval.lo) || !std::isfinite(neuron.interval.hi) ||
            neuron.interval.lo > neuron.interval.hi)
            throw Error("abstr: S-shaped neuron " + std::to_string(i) + " has no finite interval");
        const SShapedRelaxation r = initial_sshaped_relaxation(neuron.family(), neuron.interval);
        neuron.lower = r.lower;
        neuron.upper = r.upper;
        neuron.clamped = r.clamped;
        model.neurons.push_back(std::move(neuron));
    }
    model.tuple = std::move(tuple);
    return model;
}

AbstractModel add_pl_bound(AbstractModel model, const PiecewiseLinearBound &bound, bool grid_check)
{
    if (bound.neuron < 0 || bound.neuron >= static_cast<int>(model.neurons.size()))
        throw Error("add_pl_bound: neuron index out of range");
    SShapedNeuron &neuron = model.neurons[bound.neuron];
    if (grid_check && !grid_sound(neuron.family(), neuron.interval, bound, bound.direction))
        throw SoundnessError("add_pl_bound: bound fails the grid check on its neuron interval");
    neuron.refinements.push_back(bound);
    return model;
}

std::vector<AbstractViolation> abstract_violations(const AbstractModel &model, const Assignment &alpha, double tol)
{
    using Kind = AbstractViolation::Kind;
    const VerificationTuple &tuple = *model.tuple;
    if (alpha.size() != tuple.num_variables())
        throw Error("assignment does not cover the model's variables");
    std::vector<AbstractViolation> out;

    for (std::size_t i = 0; i < tuple.linear.size(); ++i) {
        const double v = tuple.linear[i].violation(alpha.values);
        if (v > tol)
            out.push_back({Kind::Linear, static_cast<int>(i), -1, v});
    }
    for (int i = 0; i < tuple.num_variables(); ++i) {
        const Interval &iv = model.intervals[i];
        const double x = alpha.values[i];
        const double v = std::max(iv.lo - x, x - iv.hi);
        if (v > tol)
            out.push_back({Kind::VariableBound, i, -1, v});
    }
    for (std::size_t n = 0; n < model.neurons.size(); ++n) {
        const SShapedNeuron &neuron = model.neurons[n];
        const double x = alpha[neuron.input];
        const double y = alpha[neuron.output];
        const int idx = static_cast<int>(n);
        if (neuron.lower(x) - y > tol)
            out.push_back({Kind::SShapedLine, idx, 0, neuron.lower(x) - y});
        if (y - neuron.upper(x) > tol)
            out.push_back({Kind::SShapedLine, idx, 1, y - neuron.upper(x)});
        for (std::size_t b = 0; b < neuron.refinements.size(); ++b) {
            const PiecewiseLinearBound &h = neuron.refinements[b];
            if (!h.admits(x, y, tol)) {
                const double gap = h.direction == BoundDirection::Lower ? h(x) - y : y - h(x);
                out.push_back({Kind::Refinement, idx, static_cast<int>(b), gap});
            }
        }
        for (std::size_t c = 0; c < neuron.eager.size(); ++c) {
            const PiecewiseChain &chain = neuron.eager[c];
            if (!chain.admits(x, y, tol)) {
                const double h = chain.value(x);
                const double gap = std::isfinite(h) ? std::abs(y - h) : kInfinity;
                out.push_back({Kind::Eager, idx, static_cast<int>(c), gap});
            }
        }
    }
    for (int a : model.piecewise_activations) {
        const ActivationConstraint &act = tuple.activations[a];
        const double v = std::abs(alpha[act.output] - act.apply(alpha[act.input]));
        if (v > tol)
            out.push_back({Kind::Activation, a, -1, v});
    }
    return out;
}

LeakyReluGadget::Trace LeakyReluGadget::trace(double x) const
{
    Trace t;
    t.a1 = x - anchor;
    t.a2 = t.a1 > 0.0 ? t.a1 : alpha * t.a1;
    t.a3 = gamma * t.a2 + anchor_value;
    return t;
}

bool LeakyReluGadget::admits(double x, double y, double tol) const
{
    const double a4 = y - value(x);
    return direction == BoundDirection::Upper ? a4 <= tol : a4 >= -tol;
}

Network LeakyReluGadget::as_network() const
{
    AffineLayer shift{Matrix::Constant(1, 1, 1.0), Vector::Constant(1, -anchor)};
    AffineLayer scale{Matrix::Constant(1, 1, gamma), Vector::Constant(1, anchor_value)};
    return Network(1, {shift, LeakyReluLayer{alpha}, scale});
}

LeakyReluGadget leaky_relu_encoding(const PiecewiseLinearBound &bound)
{
    if (!usable(bound.left_slope) || !usable(bound.right_slope))
        throw Error("leaky_relu_encoding: slopes must be positive");
    return {bound.anchor, bound.anchor_value, bound.right_slope, bound.left_slope / bound.right_slope,
            bound.direction};
}

EagerChains eager_abstraction(const SShapedFamily &family, Interval iv, int K)
{
    if (K < 2)
        throw Error("eager_abstraction: K must be at least 2");
    if (!(iv.lo <= iv.hi))
        throw Error("eager_abstraction: empty interval");
    const double eta = family.inflection();
    EagerChains out;
    out.lower.direction = BoundDirection::Lower;
    out.upper.direction = BoundDirection::Upper;

    for (int j = 0; j < K; ++j) {
        const double a = iv.lo + iv.width() * j / K;
        const double b = j + 1 == K ? iv.hi : iv.lo + iv.width() * (j + 1) / K;
        const Interval dom{j == 0 ? -kInfinity : a, j + 1 == K ? kInfinity : b};
        const double fa = family.value(a);
        const double fb = family.value(b);
        Line lo;
        Line hi;
        if (b - a < kDegenerateWidth) {
            lo = {0.0, fa};
            hi = {0.0, fb};
        } else {
            const Line tangent = tangent_line(family, (a + b) / 2);
            const Line secant = secant_line(family, a, b);
            const double flat = family.min_derivative(a, b);
            if (b <= eta) {
                lo = tangent;
                hi = secant;
            } else if (a >= eta) {
                lo = secant;
                hi = tangent;
            } else {
                lo = Line::through(a, fa, flat);
                hi = Line::through(b, fb, flat);
            }
        }
        out.lower.pieces.push_back({dom, lo});
        out.upper.pieces.push_back({dom, hi});
    }
    return out;
}

AbstractModel with_eager_chains(AbstractModel model, int K)
{
    for (auto &neuron : model.neurons) {
        // Saturated neurons keep their range bounds: tangents there underflow.
        if (neuron.clamped || neuron.interval.width() < kDegenerateWidth)
            continue;
        EagerChains chains = eager_abstraction(neuron.family(), neuron.interval, K);
        neuron.eager.push_back(std::move(chains.lower));
        neuron.eager.push_back(std::move(chains.upper));
    }
    return model;
}

}  // namespace sigverify
