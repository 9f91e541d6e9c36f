#pragma once

#include "sigverify/abstraction.hpp"
#include "sigverify/bounds.hpp"
#include "sigverify/solver.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sigverify {

struct RefinementConfig {
    int m = 30;
    double k = 2.0;
    double timeout = 1200.0;  // seconds for the whole loop
    double tol_act = kTolAct;
    bool grid_check = false;
    SolverOptions solver;

    void validate() const;
};

/// floor(m · k^round), saturated at 1e15.
long round_budget(const RefinementConfig &config, int round);

struct RefineResult {
    AbstractModel model;
    bool refined = false;
    int added = 0;
    int violated = 0;  // S-shaped neurons whose constraint α breaks beyond tol_act
    int skipped = 0;   // violated but not separable within tolerance
};

/// Adds up to `budget` separating bounds for the S-shaped neurons α violates,
/// visiting neurons layer by layer and by index within a layer.
RefineResult refine(const AbstractModel &model, const Assignment &alpha, long budget, double tol_act = kTolAct,
                    bool grid_check = false);

enum class Verdict { Robust, NotRobust, Timeout, Unknown };

const char *verdict_name(Verdict v);

struct RoundRecord {
    int round = 0;
    SolveStatus solver_status = SolveStatus::Timeout;
    double solver_time = 0.0;
    long nodes = 0;
    int label = -1;        // adversarial label of the counterexample
    int violated = 0;      // S-shaped neurons violated by the counterexample
    int added = 0;         // bounds added by refine
    long budget = 0;       // floor(m · k^round)
    double max_gap = 0.0;  // largest |α(v̂) − σ(α(v))|
};

struct CegarTrace {
    std::vector<RoundRecord> rounds;
    Verdict outcome = Verdict::Timeout;
    std::string message;

    /// Number of refine calls that added bounds.
    int refinements() const;
    int bounds_added() const;
};

struct CegarResult {
    Verdict verdict = Verdict::Timeout;
    Vector witness;          // NotRobust only: input that flips the label
    int witness_label = -1;  // NotRobust only
    CegarTrace trace;
    double elapsed = 0.0;
};

/// Called after each successful refine with the triggering α and both models.
using RefineObserver =
    std::function<void(const AbstractModel &before, const Assignment &alpha, const RefineResult &result)>;

/// Alg. VNN-CEGAR: prove on the abstraction, confirm counterexamples on the
/// network, otherwise refine and repeat.
CegarResult vnn_cegar(std::shared_ptr<const VerificationTuple> tuple, const Property &prop,
                      const RefinementConfig &config, const RefineObserver &observer = {});

/// Compass search over the property box starting at x for an input whose label
/// is lost. Returns a point that passes the concrete check, or nothing.
std::optional<Vector> local_flip_search(const Network &net, const Property &prop, Vector x);

/// Projects α onto the inputs, clamped into the property box.
Vector witness_input(const VerificationTuple &tuple, const Property &prop, const Assignment &alpha);

}  // namespace sigverify
