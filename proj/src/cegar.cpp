#include "sigverify/cegar.hpp"

#include <algorithm>
#include <cmath>

namespace sigverify {

void RefinementConfig::validate() const
{
    if (m <= 0)
        throw Error("m must be positive");
    if (!(k > 1.0))
        throw Error("k must exceed 1");
    if (!(timeout > 0.0))
        throw Error("timeout must be positive");
    if (!(tol_act > 0.0))
        throw Error("tol_act must be positive");
}

long round_budget(const RefinementConfig &config, int round)
{
    const double b = std::floor(config.m * std::pow(config.k, round));
    return b >= 1e15 ? static_cast<long>(1e15) : static_cast<long>(b);
}

const char *verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::Robust:
        return "robust";
    case Verdict::NotRobust:
        return "not_robust";
    case Verdict::Timeout:
        return "timeout";
    case Verdict::Unknown:
        return "unknown";
    }
    return "?";
}

int CegarTrace::refinements() const
{
    int n = 0;
    for (const auto &r : rounds)
        n += r.added > 0;
    return n;
}

int CegarTrace::bounds_added() const
{
    int n = 0;
    for (const auto &r : rounds)
        n += r.added;
    return n;
}

RefineResult refine(const AbstractModel &model, const Assignment &alpha, long budget, double tol_act, bool grid_check)
{
    RefineResult out;
    out.model = model;
    // model.neurons follows tuple.activations, which is layer-major and index-minor.
    for (std::size_t n = 0; n < model.neurons.size(); ++n) {
        const SShapedNeuron &neuron = model.neurons[n];
        const SShapedFamily f = neuron.family();
        const double x = alpha[neuron.input];
        const double y = alpha[neuron.output];
        if (std::abs(y - f.value(x)) <= tol_act)
            continue;
        ++out.violated;
        if (out.added >= budget)
            continue;
        const Interval iv = neuron.interval;
        const double slack = 1e-6 * std::max(1.0, iv.width());
        if (!iv.contains(x, slack))
            throw SoundnessError("neuron " + std::to_string(n) + ": value " + std::to_string(x) + " outside [" +
                                 std::to_string(iv.lo) + ", " + std::to_string(iv.hi) + "]");
        try {
            const PiecewiseLinearBound h = make_pl_bound(f, iv, static_cast<int>(n), iv.clamp(x), y, tol_act,
                                                         grid_check);
            out.model = add_pl_bound(std::move(out.model), h, grid_check);
            ++out.added;
        } catch (const NoSeparationError &) {
            ++out.skipped;
        }
    }
    out.refined = out.added > 0;
    if (out.refined)
        ++out.model.generation;
    return out;
}

Vector witness_input(const VerificationTuple &tuple, const Property &prop, const Assignment &alpha)
{
    Vector x = alpha.restrict_to(tuple.inputs);
    return x.cwiseMax(prop.input.lo).cwiseMin(prop.input.hi);
}

namespace {

double max_gap(const AbstractModel &model, const Assignment &alpha)
{
    double g = 0.0;
    for (const auto &n : model.neurons)
        g = std::max(g, std::abs(alpha[n.output] - n.family().value(alpha[n.input])));
    return g;
}

/// Largest adversarial score minus the label score; >= 0 means the label is lost.
double flip_margin(const Network &net, const Property &prop, const Vector &x)
{
    const Vector y = evaluate(net, x);
    double m = -kInfinity;
    for (int j : prop.adversarial)
        m = std::max(m, y[j] - y[prop.label]);
    return m;
}

}  // namespace

std::optional<Vector> local_flip_search(const Network &net, const Property &prop, Vector x)
{
    x = x.cwiseMax(prop.input.lo).cwiseMin(prop.input.hi);
    const Vector width = prop.input.hi - prop.input.lo;
    double best = flip_margin(net, prop, x);
    // Compass search with halving steps; every probe stays inside the box.
    for (double step = 0.125; step > 1e-12 && best < 0.0; step /= 2) {
        for (bool moved = true; moved && best < 0.0;) {
            moved = false;
            for (Eigen::Index i = 0; i < x.size() && best < 0.0; ++i) {
                for (double sign : {1.0, -1.0}) {
                    Vector t = x;
                    t[i] = std::clamp(t[i] + sign * step * width[i], prop.input.lo[i], prop.input.hi[i]);
                    const double m = flip_margin(net, prop, t);
                    if (m > best) {
                        best = m;
                        x = t;
                        moved = true;
                        break;
                    }
                }
            }
        }
    }
    if (concrete_counterexample_check(net, prop, x))
        return x;
    return std::nullopt;
}

CegarResult vnn_cegar(std::shared_ptr<const VerificationTuple> tuple, const Property &prop,
                      const RefinementConfig &config, const RefineObserver &observer)
{
    config.validate();
    const auto start = Clock::now();
    const Deadline deadline = Deadline::in(config.timeout);
    CegarResult result;
    auto done = [&](Verdict v, std::string message = {}) {
        result.verdict = v;
        result.trace.outcome = v;
        result.trace.message = std::move(message);
        result.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        return result;
    };

    if (prop.adversarial.empty())
        return done(Verdict::Robust, "empty adversarial set");

    const BoundsResult bounds = propagate_bounds(*tuple, prop.input);
    AbstractModel model = abstr(tuple, bounds);
    const bool grid_check = config.grid_check || grid_check_from_environment();

    for (int round = 0;; ++round) {
        if (deadline.expired())
            return done(Verdict::Timeout, "global budget exhausted");
        const SolveOutcome s = prove(model, prop, deadline, config.solver);
        RoundRecord rec;
        rec.round = round;
        rec.solver_status = s.status;
        rec.solver_time = s.elapsed;
        rec.nodes = s.nodes;
        rec.budget = round_budget(config, round);

        if (s.status == SolveStatus::Proven) {
            result.trace.rounds.push_back(rec);
            return done(Verdict::Robust);
        }
        if (s.status == SolveStatus::Timeout) {
            result.trace.rounds.push_back(rec);
            return done(Verdict::Timeout, s.message);
        }

        const Assignment &alpha = s.counterexample;
        rec.label = s.label;
        rec.max_gap = max_gap(model, alpha);
        const Vector x = witness_input(*tuple, prop, alpha);
        if (concrete_counterexample_check(*tuple->network, prop, x)) {
            result.witness = x;
            result.witness_label = flipped_label(prop, evaluate(*tuple->network, x)).value_or(-1);
            result.trace.rounds.push_back(rec);
            return done(Verdict::NotRobust);
        }

        RefineResult r;
        try {
            r = refine(model, alpha, rec.budget, config.tol_act, grid_check);
            if (!r.refined) {
                // α meets every S-shaped constraint within tolerance yet the network
                // is robust at α|X: retry once with a tighter tolerance.
                r = refine(model, alpha, rec.budget, config.tol_act / 10.0, grid_check);
            }
        } catch (const SoundnessError &e) {
            result.trace.rounds.push_back(rec);
            return done(Verdict::Timeout, std::string("internal soundness check failed: ") + e.what());
        }
        rec.violated = r.violated;
        rec.added = r.added;
        result.trace.rounds.push_back(rec);
        if (!r.refined) {
            // The abstraction cannot be tightened around α. A spurious α this close to
            // the network usually sits next to a real flip, so search nearby concretely.
            if (auto w = local_flip_search(*tuple->network, prop, x)) {
                result.witness = *w;
                result.witness_label = flipped_label(prop, evaluate(*tuple->network, *w)).value_or(-1);
                return done(Verdict::NotRobust, "witness found by local search next to the last counterexample");
            }
            return done(Verdict::Timeout, "spurious counterexample within activation tolerance (max gap " +
                                              std::to_string(rec.max_gap) + ")");
        }
        if (observer)
            observer(model, alpha, r);
        model = std::move(r.model);
    }
}

}  // namespace sigverify
