#include "sigverify/solver.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace sigverify {

Deadline Deadline::in(double seconds)
{
    if (!std::isfinite(seconds) || seconds > 1e9)
        return {};
    return {Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds))};
}

double Deadline::remaining() const
{
    if (at == Clock::time_point::max())
        return kInfinity;
    return std::chrono::duration<double>(at - Clock::now()).count();
}

const char *solve_status_name(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Proven:
        return "proven";
    case SolveStatus::Counterexample:
        return "counterexample";
    case SolveStatus::Timeout:
        return "timeout";
    }
    return "?";
}

namespace {

double leaky_slope(const ActivationKind &kind)
{
    if (const auto *leaky = std::get_if<LeakyReluKind>(&kind))
        return leaky->slope;
    return 0.0;
}

void add_line(LinearProgram &lp, VariableId x, VariableId y, const Line &line, BoundDirection dir)
{
    if (line.slope == 0.0) {
        if (dir == BoundDirection::Lower)
            lp.tighten(y.index, line.intercept, kInfinity);
        else
            lp.tighten(y.index, -kInfinity, line.intercept);
        return;
    }
    const std::vector<std::pair<int, double>> row{{y.index, 1.0}, {x.index, -line.slope}};
    if (dir == BoundDirection::Lower)
        lp.add_ge(row, line.intercept);
    else
        lp.add_le(row, line.intercept);
}

}  // namespace

ProofContext::ProofContext(const AbstractModel &model, const Property &prop, int adversarial_label)
    : model_(&model), prop_(&prop), label_(adversarial_label)
{
    if (std::find(prop.adversarial.begin(), prop.adversarial.end(), adversarial_label) == prop.adversarial.end())
        throw Error("label " + std::to_string(adversarial_label) + " is not in the adversarial set");
    if (prop.input.dim() != static_cast<int>(model.tuple->inputs.size()))
        throw DimensionError(0, "property box does not match the model inputs");
    for (std::size_t n = 0; n < model.neurons.size(); ++n) {
        const SShapedNeuron &neuron = model.neurons[n];
        for (std::size_t r = 0; r < neuron.refinements.size(); ++r) {
            PiecewiseChain c = neuron.refinements[r].as_chain();
            const bool convex = c.is_convex();
            chains_.push_back({static_cast<int>(n), static_cast<int>(r), -1, std::move(c), convex});
        }
        for (std::size_t e = 0; e < neuron.eager.size(); ++e) {
            const bool convex = neuron.eager[e].is_convex();
            chains_.push_back({static_cast<int>(n), -1, static_cast<int>(e), neuron.eager[e], convex});
        }
    }
}

SplitState ProofContext::root() const
{
    SplitState s;
    s.phases.assign(model_->piecewise_activations.size(), Phase::Unfixed);
    s.box = prop_->input;
    for (const ChainRef &c : chains_) {
        const Interval iv = model_->neurons[c.neuron].interval;
        const auto &pieces = c.chain.pieces;
        int first = 0;
        int last = static_cast<int>(pieces.size()) - 1;
        while (first < last && pieces[first].domain.hi < iv.lo)
            ++first;
        while (last > first && pieces[last].domain.lo > iv.hi)
            --last;
        s.ranges.emplace_back(first, last);
    }
    return s;
}

std::vector<Interval> ProofContext::node_bounds(const SplitState &state) const
{
    const VerificationTuple &tuple = *model_->tuple;
    std::vector<Interval> b = model_->intervals;
    auto meet = [&](VariableId v, double lo, double hi) {
        b[v.index].lo = std::max(b[v.index].lo, lo);
        b[v.index].hi = std::min(b[v.index].hi, hi);
    };
    for (std::size_t i = 0; i < tuple.inputs.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        meet(tuple.inputs[i], prop_->input.lo[k], prop_->input.hi[k]);
        meet(tuple.inputs[i], state.box.lo[k], state.box.hi[k]);
    }
    for (std::size_t a = 0; a < state.phases.size(); ++a) {
        const VariableId v = tuple.activations[model_->piecewise_activations[a]].input;
        if (state.phases[a] == Phase::Inactive)
            meet(v, -kInfinity, 0.0);
        else if (state.phases[a] == Phase::Active)
            meet(v, 0.0, kInfinity);
    }
    for (std::size_t c = 0; c < chains_.size(); ++c) {
        const auto [first, last] = state.ranges[c];
        const auto &pieces = chains_[c].chain.pieces;
        meet(model_->neurons[chains_[c].neuron].input, pieces[first].domain.lo, pieces[last].domain.hi);
    }
    return b;
}

LinearProgram ProofContext::build_lp(const SplitState &state) const
{
    const VerificationTuple &tuple = *model_->tuple;
    const std::vector<Interval> bounds = node_bounds(state);
    LinearProgram lp(tuple.num_variables());
    for (int i = 0; i < tuple.num_variables(); ++i) {
        lp.lo[i] = bounds[i].lo;
        lp.hi[i] = bounds[i].hi;
    }

    for (const LinearConstraint &c : tuple.linear) {
        if (c.origin == ConstraintOrigin::Input)
            continue;  // already variable bounds
        std::vector<std::pair<int, double>> row;
        for (const auto &[id, coef] : c.coefficients)
            row.emplace_back(id.index, coef);
        switch (c.relation) {
        case Relation::Equal:
            lp.add_eq(row, c.constant);
            break;
        case Relation::LessEqual:
            lp.add_le(row, c.constant);
            break;
        case Relation::GreaterEqual:
            lp.add_ge(row, c.constant);
            break;
        }
    }
    lp.add_ge({{tuple.outputs[label_].index, 1.0}, {tuple.outputs[prop_->label].index, -1.0}}, 0.0);

    for (const SShapedNeuron &n : model_->neurons) {
        add_line(lp, n.input, n.output, n.lower, BoundDirection::Lower);
        add_line(lp, n.input, n.output, n.upper, BoundDirection::Upper);
    }

    for (std::size_t c = 0; c < chains_.size(); ++c) {
        const ChainRef &ref = chains_[c];
        const SShapedNeuron &n = model_->neurons[ref.neuron];
        const auto [first, last] = state.ranges[c];
        const auto &pieces = ref.chain.pieces;
        const BoundDirection dir = ref.chain.direction;
        if (first == last || ref.convex) {
            for (int k = first; k <= last; ++k)
                add_line(lp, n.input, n.output, pieces[k].line, dir);
            continue;
        }
        PiecewiseChain sub{dir, {pieces.begin() + first, pieces.begin() + last + 1}};
        const Interval v = bounds[n.input.index];
        if (v.lo > v.hi)
            continue;  // crossed bounds already make the LP infeasible
        for (const Line &line : sub.envelope(v))
            add_line(lp, n.input, n.output, line, dir);
    }

    for (std::size_t a = 0; a < state.phases.size(); ++a) {
        const ActivationConstraint &act = tuple.activations[model_->piecewise_activations[a]];
        const double s = leaky_slope(act.kind);
        const int v = act.input.index;
        const int y = act.output.index;
        const double l = bounds[v].lo;
        const double u = bounds[v].hi;
        if (state.phases[a] == Phase::Active || l >= 0.0) {
            lp.add_eq({{y, 1.0}, {v, -1.0}}, 0.0);
        } else if (state.phases[a] == Phase::Inactive || u <= 0.0) {
            lp.add_eq({{y, 1.0}, {v, -s}}, 0.0);
        } else {
            const double k = (u - s * l) / (u - l);
            const double icpt = s * l - k * l;
            if (s <= 1.0) {
                lp.add_ge({{y, 1.0}, {v, -1.0}}, 0.0);
                lp.add_ge({{y, 1.0}, {v, -s}}, 0.0);
                lp.add_le({{y, 1.0}, {v, -k}}, icpt);
            } else {
                lp.add_le({{y, 1.0}, {v, -1.0}}, 0.0);
                lp.add_le({{y, 1.0}, {v, -s}}, 0.0);
                lp.add_ge({{y, 1.0}, {v, -k}}, icpt);
            }
        }
    }
    return lp;
}

std::optional<SplitDecision> ProofContext::select_split(const SplitState &state, const Vector &alpha) const
{
    const VerificationTuple &tuple = *model_->tuple;
    const std::vector<Interval> bounds = node_bounds(state);
    std::optional<SplitDecision> best;
    double best_width = -1.0;
    int best_var = -1;
    auto consider = [&](SplitDecision d, VariableId v) {
        const double w = bounds[v.index].width();
        if (w > best_width || (w == best_width && v.index < best_var)) {
            best = d;
            best_width = w;
            best_var = v.index;
        }
    };

    for (std::size_t a = 0; a < state.phases.size(); ++a) {
        if (state.phases[a] != Phase::Unfixed)
            continue;
        const ActivationConstraint &act = tuple.activations[model_->piecewise_activations[a]];
        const Interval iv = bounds[act.input.index];
        if (iv.lo >= 0.0 || iv.hi <= 0.0)
            continue;
        if (std::abs(alpha[act.output.index] - act.apply(alpha[act.input.index])) > kTolLp)
            consider({SplitDecision::Kind::Phase, static_cast<int>(a), 0.0}, act.input);
    }
    for (std::size_t c = 0; c < chains_.size(); ++c) {
        const ChainRef &ref = chains_[c];
        const auto [first, last] = state.ranges[c];
        if (first == last || ref.convex)
            continue;
        const SShapedNeuron &n = model_->neurons[ref.neuron];
        PiecewiseChain sub{ref.chain.direction, {ref.chain.pieces.begin() + first, ref.chain.pieces.begin() + last + 1}};
        if (sub.admits(alpha[n.input.index], alpha[n.output.index], kTolLp))
            continue;
        const int mid = (first + last) / 2;
        consider({SplitDecision::Kind::Chain, static_cast<int>(c), ref.chain.pieces[mid].domain.hi}, n.input);
    }
    return best;
}

std::pair<SplitState, SplitState> ProofContext::branch(const SplitState &state, const SplitDecision &d) const
{
    SplitState left = state;
    SplitState right = state;
    ++left.depth;
    ++right.depth;
    switch (d.kind) {
    case SplitDecision::Kind::Phase:
        if (state.phases.at(d.index) != Phase::Unfixed)
            throw Error("branch: activation already fixed");
        left.phases[d.index] = Phase::Inactive;
        right.phases[d.index] = Phase::Active;
        break;
    case SplitDecision::Kind::Chain: {
        const auto [first, last] = state.ranges.at(d.index);
        if (first == last)
            throw Error("branch: chain already fixed");
        const int mid = (first + last) / 2;
        left.ranges[d.index] = {first, mid};
        right.ranges[d.index] = {mid + 1, last};
        break;
    }
    case SplitDecision::Kind::Input:
        left.box.hi[d.index] = d.point;
        right.box.lo[d.index] = d.point;
        ++left.input_splits;
        ++right.input_splits;
        break;
    }
    return {std::move(left), std::move(right)};
}

std::optional<SplitDecision> ProofContext::input_split(const SplitState &state) const
{
    Eigen::Index widest = 0;
    const Vector width = state.box.hi - state.box.lo;
    if (width.size() == 0)
        return std::nullopt;
    const double w = width.maxCoeff(&widest);
    if (!(w > kDegenerateWidth))
        return std::nullopt;
    return SplitDecision{SplitDecision::Kind::Input, static_cast<int>(widest), state.box.lo[widest] + w / 2};
}

bool ProofContext::accepts(const Assignment &alpha, double tol) const
{
    const VerificationTuple &tuple = *model_->tuple;
    if (!abstract_violations(*model_, alpha, tol).empty())
        return false;
    if (!prop_->input.contains(alpha.restrict_to(tuple.inputs), tol))
        return false;
    return alpha[tuple.outputs[label_]] - alpha[tuple.outputs[prop_->label]] >= -tol;
}

namespace {

enum class NodeVerdict { Pruned, Found, Children, Stuck };

struct NodeResult {
    NodeVerdict verdict = NodeVerdict::Pruned;
    Assignment alpha;
    std::pair<SplitState, SplitState> children;
    bool unknown_lp = false;
};

// Same leaf, pushed to the largest flip margin. A vertex that only meets the
// flip row within LP tolerance is rarely a real counterexample; the deepest
// point of the leaf is the best candidate for the concrete check.
Assignment deepest(const ProofContext &ctx, LinearProgram lp, Assignment alpha)
{
    const VerificationTuple &tuple = *ctx.model().tuple;
    lp.objective = Vector::Zero(lp.num_vars());
    lp.objective[tuple.outputs[ctx.label()].index] = -1.0;
    lp.objective[tuple.outputs[ctx.property().label].index] = 1.0;
    const LpResult r = lp_solve(lp);
    if (r.status == LpStatus::Optimal) {
        Assignment best{r.x};
        if (ctx.accepts(best))
            return best;
    }
    return alpha;
}

NodeResult process(const ProofContext &ctx, const SplitState &state, const SolverOptions &options)
{
    NodeResult out;
    LinearProgram lp = ctx.build_lp(state);
    const LpResult r = lp_solve(lp);
    std::optional<SplitDecision> d;
    if (r.status == LpStatus::Infeasible)
        return out;
    if (r.status == LpStatus::Optimal) {
        Assignment alpha{r.x};
        if (ctx.accepts(alpha)) {
            out.verdict = NodeVerdict::Found;
            out.alpha = deepest(ctx, std::move(lp), std::move(alpha));
            return out;
        }
        d = ctx.select_split(state, alpha.values);
    } else {
        out.unknown_lp = true;
    }
    if (!d && state.input_splits < options.max_input_splits)
        d = ctx.input_split(state);
    if (!d) {
        out.verdict = NodeVerdict::Stuck;
        return out;
    }
    out.verdict = NodeVerdict::Children;
    out.children = ctx.branch(state, *d);
    return out;
}

enum class SearchStatus { Proven, Found, Timeout, Stuck };

struct SearchResult {
    SearchStatus status = SearchStatus::Proven;
    Assignment alpha;
    long nodes = 0;
    long unknown = 0;
};

SearchResult search_serial(const ProofContext &ctx, Deadline deadline, const SolverOptions &options)
{
    SearchResult res;
    bool stuck = false;
    std::vector<SplitState> stack{ctx.root()};
    while (!stack.empty()) {
        if (deadline.expired()) {
            res.status = SearchStatus::Timeout;
            return res;
        }
        SplitState s = std::move(stack.back());
        stack.pop_back();
        ++res.nodes;
        NodeResult r = process(ctx, s, options);
        res.unknown += r.unknown_lp;
        switch (r.verdict) {
        case NodeVerdict::Pruned:
            break;
        case NodeVerdict::Found:
            res.status = SearchStatus::Found;
            res.alpha = std::move(r.alpha);
            return res;
        case NodeVerdict::Stuck:
            stuck = true;
            break;
        case NodeVerdict::Children:
            stack.push_back(std::move(r.children.second));
            stack.push_back(std::move(r.children.first));
            break;
        }
    }
    res.status = stuck ? SearchStatus::Stuck : SearchStatus::Proven;
    return res;
}

SearchResult search_parallel(const ProofContext &ctx, Deadline deadline, const SolverOptions &options)
{
    std::mutex mu;
    std::condition_variable cv;
    std::deque<SplitState> queue{ctx.root()};
    int busy = 0;
    std::atomic<bool> found{false};
    std::atomic<bool> timed_out{false};
    std::atomic<bool> stuck{false};
    std::atomic<long> nodes{0};
    std::atomic<long> unknown{0};
    Assignment witness;

    auto worker = [&] {
        for (;;) {
            SplitState s;
            {
                std::unique_lock lock(mu);
                cv.wait(lock, [&] { return found || timed_out || !queue.empty() || busy == 0; });
                if (found || timed_out || queue.empty())
                    return;
                s = std::move(queue.back());
                queue.pop_back();
                ++busy;
            }
            if (deadline.expired())
                timed_out = true;
            NodeResult r;
            if (!timed_out && !found) {
                nodes.fetch_add(1);
                r = process(ctx, s, options);
                unknown.fetch_add(r.unknown_lp);
            }
            {
                std::lock_guard lock(mu);
                --busy;
                if (!timed_out && !found) {
                    if (r.verdict == NodeVerdict::Found) {
                        witness = std::move(r.alpha);
                        found = true;
                    } else if (r.verdict == NodeVerdict::Stuck) {
                        stuck = true;
                    } else if (r.verdict == NodeVerdict::Children) {
                        queue.push_back(std::move(r.children.second));
                        queue.push_back(std::move(r.children.first));
                    }
                }
            }
            cv.notify_all();
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < options.workers; ++i)
        pool.emplace_back(worker);
    for (auto &t : pool)
        t.join();

    SearchResult res;
    res.nodes = nodes;
    res.unknown = unknown;
    if (found) {
        res.status = SearchStatus::Found;
        res.alpha = std::move(witness);
    } else if (timed_out) {
        res.status = SearchStatus::Timeout;
    } else {
        res.status = stuck ? SearchStatus::Stuck : SearchStatus::Proven;
    }
    return res;
}

}  // namespace

SolveOutcome prove(const AbstractModel &model, const Property &prop, Deadline deadline, const SolverOptions &options)
{
    const auto start = Clock::now();
    SolveOutcome out;
    std::vector<int> labels = prop.adversarial;
    std::sort(labels.begin(), labels.end());
    bool stuck = false;
    out.status = SolveStatus::Proven;
    for (int j : labels) {
        ProofContext ctx(model, prop, j);
        const SearchResult r =
            options.workers > 1 ? search_parallel(ctx, deadline, options) : search_serial(ctx, deadline, options);
        out.nodes += r.nodes;
        out.lp_calls += r.nodes;
        out.unknown_lps += r.unknown;
        if (r.status == SearchStatus::Found) {
            if (!ctx.accepts(r.alpha))
                throw SoundnessError("prove: counterexample fails the abstraction check");
            out.status = SolveStatus::Counterexample;
            out.counterexample = r.alpha;
            out.label = j;
            break;
        }
        if (r.status == SearchStatus::Timeout) {
            out.status = SolveStatus::Timeout;
            out.message = "budget exhausted on label " + std::to_string(j);
            break;
        }
        stuck = stuck || r.status == SearchStatus::Stuck;
    }
    if (out.status == SolveStatus::Proven && stuck) {
        out.status = SolveStatus::Timeout;
        out.message = "inconclusive LP relaxations could not be split further";
    }
    out.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

}  // namespace sigverify
