#pragma once

#include "sigverify/common.hpp"
#include "sigverify/network.hpp"

#include <compare>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace sigverify {

struct VariableId {
    int index = -1;

    friend auto operator<=>(const VariableId &, const VariableId &) = default;
};

enum class VariableRole { Input, PreActivation, PostActivation, Auxiliary };

/// Where a variable comes from. `block` counts affine layers seen so far, so a
/// pre/post activation pair shares both `block` and `neuron`.
struct VariableInfo {
    VariableRole role = VariableRole::Auxiliary;
    int layer = -1;  // network layer producing the value, -1 for inputs
    int block = 0;
    int neuron = 0;
};

enum class Relation { LessEqual, Equal, GreaterEqual };

enum class ConstraintOrigin { Network, Input, Output };

/// sum(coefficients) relation constant
struct LinearConstraint {
    std::vector<std::pair<VariableId, double>> coefficients;
    double constant = 0.0;
    Relation relation = Relation::Equal;
    ConstraintOrigin origin = ConstraintOrigin::Network;

    double lhs(const Vector &values) const;
    /// Amount by which `values` violates the constraint (0 when satisfied).
    double violation(const Vector &values) const;
    void validate() const;
};

struct ReluKind {};
struct LeakyReluKind {
    double slope = 0.0;
};
struct SShapedActivation {
    SShapedKind family = SShapedKind::Sigmoid;
};
using ActivationKind = std::variant<ReluKind, LeakyReluKind, SShapedActivation>;

struct ActivationConstraint {
    VariableId input;
    VariableId output;
    ActivationKind kind;

    double apply(double x) const;
    bool is_sshaped() const { return std::holds_alternative<SShapedActivation>(kind); }
};

/// M = <V, X, Y, C_lin, C_act> for a network plus its input property.
struct VerificationTuple {
    std::vector<VariableInfo> variables;
    std::vector<VariableId> inputs;
    std::vector<VariableId> outputs;
    std::vector<LinearConstraint> linear;
    std::vector<ActivationConstraint> activations;

    std::shared_ptr<const Network> network;
    /// layer_values[i] are the variables holding the value entering layer i;
    /// layer_values.back() == outputs.
    std::vector<std::vector<VariableId>> layer_values;
    /// activation_of_layer[i] is the index into `activations` of neuron 0 of layer i, or -1.
    std::vector<int> activation_of_layer;

    int num_variables() const { return static_cast<int>(variables.size()); }
};

struct InputBox {
    Vector lo;
    Vector hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vector &x, double tol = 0.0) const;
    static InputBox around(const Vector &center, double radius);
};

/// Φ := x ∈ box ⇒ ∀ j ∈ adversarial: y_label − y_j > 0.
struct Property {
    InputBox input;
    int label = 0;
    std::vector<int> adversarial;

    void validate(int input_dim, int output_dim) const;
    /// Label ȳ against every other output.
    static Property robustness(InputBox box, int label, int num_outputs);
};

/// Total map from the tuple's variables to values.
struct Assignment {
    Vector values;

    double operator[](VariableId id) const { return values[id.index]; }
    double &operator[](VariableId id) { return values[id.index]; }
    int size() const { return static_cast<int>(values.size()); }
    Vector restrict_to(const std::vector<VariableId> &ids) const;
};

VerificationTuple encode(const Network &net, const Property &prop);
VerificationTuple encode(std::shared_ptr<const Network> net, const Property &prop);

/// Φ_in ∪ {y_j − y_ȳ ≥ 0}.
std::vector<LinearConstraint> negated_query(const VerificationTuple &tuple, const Property &prop, int adversarial_label);

/// Fills every variable of `tuple` from an exact forward pass at `input`.
Assignment execution_assignment(const VerificationTuple &tuple, const Vector &input);

struct ConstraintRef {
    enum class Kind { Linear, Activation, Output };
    Kind kind;
    int index;  // into tuple.linear / tuple.activations, or the adversarial label

    friend bool operator==(const ConstraintRef &, const ConstraintRef &) = default;
};

enum class Satisfaction { Satisfies, Violates };

struct AssignmentCheck {
    /// Violates ⇔ α is a counterexample: it meets Φ_in, C_lin and C_act and breaks Φ_out.
    Satisfaction verdict = Satisfaction::Satisfies;
    /// Constraints of the tuple (including Φ_in) that α fails.
    std::vector<ConstraintRef> broken;
    /// Output atoms y_j − y_ȳ ≥ 0 that α meets.
    std::vector<ConstraintRef> violating;
};

AssignmentCheck check_assignment(const VerificationTuple &tuple, const Property &prop, const Assignment &alpha,
                                 double tol_act = kTolAct, double tol_lin = kTolLp);

/// True iff the network evaluated at `input` breaks Φ_out (ties count as violations).
bool concrete_counterexample_check(const Network &net, const Property &prop, const Vector &input);
bool concrete_counterexample_check(const VerificationTuple &tuple, const Property &prop, const Assignment &alpha);

/// Adversarial label achieving y_j − y_ȳ ≥ 0 at `outputs`, if any.
std::optional<int> flipped_label(const Property &prop, const Vector &outputs);

}  // namespace sigverify
