#pragma once

#include "sigverify/common.hpp"

#include <cmath>
#include <string_view>

namespace sigverify {

// Scalar kernels. Derivatives are written in terms of exp(-|x|) so that they
// stay strictly positive (and accurate) far into the saturated tails.

template <typename Scalar>
Scalar sigmoid(Scalar x)
{
    using std::exp;
    if (x >= Scalar(0))
        return Scalar(1) / (Scalar(1) + exp(-x));
    Scalar e = exp(x);
    return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar sigmoid_derivative(Scalar x)
{
    using std::abs;
    using std::exp;
    Scalar e = exp(-abs(x));
    return e / ((Scalar(1) + e) * (Scalar(1) + e));
}

template <typename Scalar>
Scalar tanh_derivative(Scalar x)
{
    using std::abs;
    using std::exp;
    Scalar e = exp(Scalar(-2) * abs(x));
    return Scalar(4) * e / ((Scalar(1) + e) * (Scalar(1) + e));
}

enum class SShapedKind { Sigmoid, Tanh };

/// A bounded, increasing activation with a single inflection point. Convex
/// below the inflection point, concave above it.
class SShapedFamily {
public:
    using Fn = double (*)(double);

    SShapedFamily(SShapedKind kind, std::string_view name, Fn value, Fn derivative, double inflection,
                  Interval output_range)
        : kind_(kind), name_(name), value_(value), derivative_(derivative), inflection_(inflection),
          range_(output_range)
    {
    }

    static SShapedFamily sigmoid()
    {
        return {SShapedKind::Sigmoid, "sigmoid", &sigverify::sigmoid<double>, &sigmoid_derivative<double>, 0.0,
                {0.0, 1.0}};
    }
    static SShapedFamily tanh()
    {
        return {SShapedKind::Tanh, "tanh", [](double x) { return std::tanh(x); }, &tanh_derivative<double>, 0.0,
                {-1.0, 1.0}};
    }
    static SShapedFamily of(SShapedKind kind) { return kind == SShapedKind::Sigmoid ? sigmoid() : tanh(); }

    SShapedKind kind() const { return kind_; }
    std::string_view name() const { return name_; }
    double value(double x) const { return value_(x); }
    double derivative(double x) const { return derivative_(x); }
    double inflection() const { return inflection_; }
    Interval output_range() const { return range_; }

    /// Largest derivative over [a, b]; the derivative is unimodal with its peak at the inflection point.
    double max_derivative(double a, double b) const { return derivative(std::clamp(inflection_, a, b)); }
    /// Smallest derivative over [a, b]; attained at an endpoint.
    double min_derivative(double a, double b) const { return std::min(derivative(a), derivative(b)); }

    friend bool operator==(const SShapedFamily &a, const SShapedFamily &b) { return a.kind_ == b.kind_; }

private:
    SShapedKind kind_;
    std::string_view name_;
    Fn value_;
    Fn derivative_;
    double inflection_;
    Interval range_;
};

}  // namespace sigverify
