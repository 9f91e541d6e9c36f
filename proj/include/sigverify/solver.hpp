#pragma once

#include "sigverify/abstraction.hpp"
#include "sigverify/lp.hpp"
#include "sigverify/problem.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sigverify {

using Clock = std::chrono::steady_clock;

/// Wall-clock limit shared by nested calls.
struct Deadline {
    Clock::time_point at = Clock::time_point::max();

    static Deadline in(double seconds);
    bool expired() const { return Clock::now() >= at; }
    double remaining() const;
};

enum class Phase : std::int8_t { Unfixed, Inactive, Active };

/// Choices made along one branch-and-bound path.
struct SplitState {
    std::vector<Phase> phases;                // per piecewise activation of the model
    std::vector<std::pair<int, int>> ranges;  // per chain: active pieces [first, last]
    InputBox box;                             // current input box
    int input_splits = 0;
    int depth = 0;
};

struct SplitDecision {
    enum class Kind { Phase, Chain, Input };
    Kind kind = Kind::Phase;
    int index = -1;      // piecewise activation, chain, or input coordinate
    double point = 0.0;  // chain breakpoint or input midpoint
};

/// One adversarial label's query C′ ∧ Φ_in ∧ y_j − y_ȳ >= 0 over an abstraction,
/// with the piecewise structure exposed for branching.
class ProofContext {
public:
    ProofContext(const AbstractModel &model, const Property &prop, int adversarial_label);

    struct ChainRef {
        int neuron;
        int refinement;  // index into refinements, or -1 for an eager chain
        int eager;       // index into eager, or -1
        PiecewiseChain chain;
        bool convex;
    };

    const AbstractModel &model() const { return *model_; }
    const Property &property() const { return *prop_; }
    int label() const { return label_; }
    const std::vector<ChainRef> &chains() const { return chains_; }

    SplitState root() const;
    /// Variable bounds implied by the split state (model intervals ∩ choices).
    std::vector<Interval> node_bounds(const SplitState &state) const;
    LinearProgram build_lp(const SplitState &state) const;

    /// Violated unfixed target with the widest interval, ties to the lowest variable id.
    std::optional<SplitDecision> select_split(const SplitState &state, const Vector &alpha) const;
    /// Two children whose feasible sets cover the parent's.
    std::pair<SplitState, SplitState> branch(const SplitState &state, const SplitDecision &d) const;
    /// Input bisection along the widest coordinate; used when an LP is inconclusive.
    std::optional<SplitDecision> input_split(const SplitState &state) const;

    /// α satisfies the model, Φ_in and the flip constraint within `tol`.
    bool accepts(const Assignment &alpha, double tol = kTolLp) const;

private:
    const AbstractModel *model_;
    const Property *prop_;
    int label_;
    std::vector<ChainRef> chains_;
};

struct SolverOptions {
    int workers = 1;
    int max_input_splits = 24;
};

enum class SolveStatus { Proven, Counterexample, Timeout };

const char *solve_status_name(SolveStatus s);

struct SolveOutcome {
    SolveStatus status = SolveStatus::Timeout;
    Assignment counterexample;
    int label = -1;  // adversarial label of the counterexample
    double elapsed = 0.0;
    long nodes = 0;
    long lp_calls = 0;
    long unknown_lps = 0;
    std::string message;
};

/// Decides C′ ∧ Φ_in ∧ ¬Φ_out by branch and bound, one adversarial label at a
/// time in ascending order. With one worker the search is depth-first and
/// deterministic.
SolveOutcome prove(const AbstractModel &model, const Property &prop, Deadline deadline,
                   const SolverOptions &options = {});

}  // namespace sigverify
