#include "sigverify/problem.hpp"

#include <algorithm>
#include <cmath>

namespace sigverify {

double LinearConstraint::lhs(const Vector &values) const
{
    double sum = 0.0;
    for (const auto &[id, coef] : coefficients)
        sum += coef * values[id.index];
    return sum;
}

double LinearConstraint::violation(const Vector &values) const
{
    const double diff = lhs(values) - constant;
    switch (relation) {
    case Relation::LessEqual:
        return std::max(0.0, diff);
    case Relation::GreaterEqual:
        return std::max(0.0, -diff);
    case Relation::Equal:
        return std::abs(diff);
    }
    return 0.0;
}

void LinearConstraint::validate() const
{
    bool nonzero = false;
    for (const auto &[id, coef] : coefficients) {
        if (!std::isfinite(coef))
            throw Error("linear constraint has a non-finite coefficient");
        nonzero = nonzero || coef != 0.0;
    }
    if (!nonzero)
        throw Error("linear constraint has no nonzero coefficient");
    if (!std::isfinite(constant))
        throw Error("linear constraint has a non-finite constant");
}

double ActivationConstraint::apply(double x) const
{
    return std::visit(
        [x](const auto &k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ReluKind>)
                return x > 0.0 ? x : 0.0;
            else if constexpr (std::is_same_v<T, LeakyReluKind>)
                return x > 0.0 ? x : k.slope * x;
            else
                return SShapedFamily::of(k.family).value(x);
        },
        kind);
}

bool InputBox::contains(const Vector &x, double tol) const
{
    if (x.size() != lo.size())
        return false;
    return ((x.array() >= lo.array() - tol) && (x.array() <= hi.array() + tol)).all();
}

InputBox InputBox::around(const Vector &center, double radius)
{
    return {center.array() - radius, center.array() + radius};
}

void Property::validate(int input_dim, int output_dim) const
{
    if (input.lo.size() != input_dim || input.hi.size() != input_dim)
        throw DimensionError(0, "input box has dimension " + std::to_string(input.lo.size()) + ", network expects " +
                                    std::to_string(input_dim));
    if (!input.lo.allFinite() || !input.hi.allFinite() || (input.lo.array() > input.hi.array()).any())
        throw Error("input box must be finite with lo <= hi");
    if (label < 0 || label >= output_dim)
        throw Error("label " + std::to_string(label) + " outside output arity " + std::to_string(output_dim));
    for (int j : adversarial) {
        if (j < 0 || j >= output_dim)
            throw Error("adversarial label " + std::to_string(j) + " outside output arity");
        if (j == label)
            throw Error("adversarial set contains the protected label");
    }
}

Property Property::robustness(InputBox box, int label, int num_outputs)
{
    Property prop{std::move(box), label, {}};
    for (int j = 0; j < num_outputs; ++j)
        if (j != label)
            prop.adversarial.push_back(j);
    return prop;
}

Vector Assignment::restrict_to(const std::vector<VariableId> &ids) const
{
    Vector out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = values[ids[i].index];
    return out;
}

VerificationTuple encode(std::shared_ptr<const Network> net_ptr, const Property &prop)
{
    const Network &net = *net_ptr;
    prop.validate(net.input_dim(), net.output_dim());

    VerificationTuple tuple;
    tuple.network = std::move(net_ptr);
    auto add_variable = [&](VariableInfo info) {
        VariableId id{tuple.num_variables()};
        tuple.variables.push_back(info);
        return id;
    };

    std::vector<VariableId> current;
    for (int i = 0; i < net.input_dim(); ++i)
        current.push_back(add_variable({VariableRole::Input, -1, 0, i}));
    tuple.inputs = current;
    tuple.layer_values.push_back(current);

    int block = 0;
    for (std::size_t li = 0; li < net.size(); ++li) {
        const int layer = static_cast<int>(li);
        const Layer &l = net.layers()[li];
        std::vector<VariableId> next;
        if (const auto *affine = std::get_if<AffineLayer>(&l)) {
            ++block;
            tuple.activation_of_layer.push_back(-1);
            for (Eigen::Index r = 0; r < affine->weights.rows(); ++r) {
                VariableId v = add_variable({VariableRole::PreActivation, layer, block, static_cast<int>(r)});
                LinearConstraint eq;
                eq.coefficients.emplace_back(v, 1.0);
                for (Eigen::Index c = 0; c < affine->weights.cols(); ++c)
                    if (affine->weights(r, c) != 0.0)
                        eq.coefficients.emplace_back(current[c], -affine->weights(r, c));
                eq.constant = affine->bias[r];
                eq.relation = Relation::Equal;
                eq.origin = ConstraintOrigin::Network;
                tuple.linear.push_back(std::move(eq));
                next.push_back(v);
            }
        } else {
            ActivationKind kind = std::visit(
                [](const auto &a) -> ActivationKind {
                    using T = std::decay_t<decltype(a)>;
                    if constexpr (std::is_same_v<T, ReluLayer>)
                        return ReluKind{};
                    else if constexpr (std::is_same_v<T, LeakyReluLayer>)
                        return LeakyReluKind{a.slope};
                    else if constexpr (std::is_same_v<T, SShapedLayer>)
                        return SShapedActivation{a.family};
                    else
                        return ReluKind{};
                },
                l);
            tuple.activation_of_layer.push_back(static_cast<int>(tuple.activations.size()));
            for (std::size_t n = 0; n < current.size(); ++n) {
                VariableId post = add_variable({VariableRole::PostActivation, layer, block, static_cast<int>(n)});
                tuple.activations.push_back({current[n], post, kind});
                next.push_back(post);
            }
        }
        current = std::move(next);
        tuple.layer_values.push_back(current);
    }
    tuple.outputs = current;

    for (int i = 0; i < net.input_dim(); ++i) {
        LinearConstraint lo{{{tuple.inputs[i], 1.0}}, prop.input.lo[i], Relation::GreaterEqual, ConstraintOrigin::Input};
        LinearConstraint hi{{{tuple.inputs[i], 1.0}}, prop.input.hi[i], Relation::LessEqual, ConstraintOrigin::Input};
        tuple.linear.push_back(std::move(lo));
        tuple.linear.push_back(std::move(hi));
    }
    return tuple;
}

VerificationTuple encode(const Network &net, const Property &prop)
{
    return encode(std::make_shared<const Network>(net), prop);
}

std::vector<LinearConstraint> negated_query(const VerificationTuple &tuple, const Property &prop, int adversarial_label)
{
    if (std::find(prop.adversarial.begin(), prop.adversarial.end(), adversarial_label) == prop.adversarial.end())
        throw Error("label " + std::to_string(adversarial_label) + " is not in the adversarial set");
    std::vector<LinearConstraint> out;
    for (const auto &c : tuple.linear)
        if (c.origin == ConstraintOrigin::Input)
            out.push_back(c);
    LinearConstraint flip;
    flip.coefficients = {{tuple.outputs[adversarial_label], 1.0}, {tuple.outputs[prop.label], -1.0}};
    flip.constant = 0.0;
    flip.relation = Relation::GreaterEqual;
    flip.origin = ConstraintOrigin::Output;
    out.push_back(std::move(flip));
    return out;
}

Assignment execution_assignment(const VerificationTuple &tuple, const Vector &input)
{
    const auto trace = evaluate_trace(*tuple.network, input);
    Assignment alpha{Vector::Zero(tuple.num_variables())};
    for (std::size_t i = 0; i < trace.size(); ++i)
        for (std::size_t n = 0; n < tuple.layer_values[i].size(); ++n)
            alpha[tuple.layer_values[i][n]] = trace[i][static_cast<Eigen::Index>(n)];
    return alpha;
}

AssignmentCheck check_assignment(const VerificationTuple &tuple, const Property &prop, const Assignment &alpha,
                                 double tol_act, double tol_lin)
{
    if (alpha.size() != tuple.num_variables())
        throw Error("assignment covers " + std::to_string(alpha.size()) + " of " +
                    std::to_string(tuple.num_variables()) + " variables");
    AssignmentCheck result;
    for (std::size_t i = 0; i < tuple.linear.size(); ++i)
        if (tuple.linear[i].violation(alpha.values) > tol_lin)
            result.broken.push_back({ConstraintRef::Kind::Linear, static_cast<int>(i)});
    for (std::size_t i = 0; i < tuple.activations.size(); ++i) {
        const auto &act = tuple.activations[i];
        if (std::abs(alpha[act.output] - act.apply(alpha[act.input])) > tol_act)
            result.broken.push_back({ConstraintRef::Kind::Activation, static_cast<int>(i)});
    }
    const double y_label = alpha[tuple.outputs[prop.label]];
    for (int j : prop.adversarial)
        if (alpha[tuple.outputs[j]] - y_label >= -tol_lin)
            result.violating.push_back({ConstraintRef::Kind::Output, j});
    if (result.broken.empty() && !result.violating.empty())
        result.verdict = Satisfaction::Violates;
    return result;
}

std::optional<int> flipped_label(const Property &prop, const Vector &outputs)
{
    for (int j : prop.adversarial)
        if (outputs[j] - outputs[prop.label] >= 0.0)
            return j;
    return std::nullopt;
}

bool concrete_counterexample_check(const Network &net, const Property &prop, const Vector &input)
{
    if (!prop.input.contains(input))
        throw Error("candidate input lies outside the input box");
    return flipped_label(prop, evaluate(net, input)).has_value();
}

bool concrete_counterexample_check(const VerificationTuple &tuple, const Property &prop, const Assignment &alpha)
{
    return concrete_counterexample_check(*tuple.network, prop, alpha.restrict_to(tuple.inputs));
}

}  // namespace sigverify
