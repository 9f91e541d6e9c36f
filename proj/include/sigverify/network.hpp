#pragma once

#include "sigverify/common.hpp"
#include "sigverify/sshaped.hpp"

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace sigverify {

struct AffineLayer {
    Matrix weights;  // rows = outputs, cols = inputs
    Vector bias;
};

struct ReluLayer {};

struct LeakyReluLayer {
    double slope = 0.01;
};

struct SShapedLayer {
    SShapedKind family = SShapedKind::Sigmoid;
};

using Layer = std::variant<AffineLayer, ReluLayer, LeakyReluLayer, SShapedLayer>;

bool is_activation(const Layer &layer);
std::string layer_kind_name(const Layer &layer);

/// Output dimension of `layer` when fed `input_dim` values.
int layer_output_dim(const Layer &layer, int input_dim);

/// Applies one layer to a vector.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply_layer(const Layer &layer,
                                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &x)
{
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    return std::visit(
        [&](const auto &l) -> Vec {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, AffineLayer>) {
                return l.weights.template cast<Scalar>() * x + l.bias.template cast<Scalar>();
            } else if constexpr (std::is_same_v<T, ReluLayer>) {
                return x.cwiseMax(Scalar(0));
            } else if constexpr (std::is_same_v<T, LeakyReluLayer>) {
                Scalar s(l.slope);
                return x.unaryExpr([s](Scalar v) { return v > Scalar(0) ? v : s * v; });
            } else {
                if (l.family == SShapedKind::Sigmoid)
                    return x.unaryExpr([](Scalar v) { return sigmoid(v); });
                return x.unaryExpr([](Scalar v) {
                    using std::tanh;
                    return tanh(v);
                });
            }
        },
        layer);
}

/// Layered feed-forward network. Dimensions are validated on construction and
/// the object is immutable afterwards.
class Network {
public:
    Network(int input_dim, std::vector<Layer> layers);

    int input_dim() const { return input_dim_; }
    int output_dim() const { return dims_.back(); }
    /// dims()[i] is the width of the value entering layer i; dims().back() is the output width.
    const std::vector<int> &dims() const { return dims_; }
    const std::vector<Layer> &layers() const { return layers_; }
    std::size_t size() const { return layers_.size(); }

    int count_activation_neurons() const;
    int count_sshaped_neurons() const;

    friend bool operator==(const Network &a, const Network &b);

private:
    int input_dim_;
    std::vector<Layer> layers_;
    std::vector<int> dims_;
};

/// Exact forward evaluation.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> evaluate(const Network &net,
                                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &input)
{
    if (input.size() != net.input_dim())
        throw DimensionError(0, "input has " + std::to_string(input.size()) + " entries, expected " +
                                    std::to_string(net.input_dim()));
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = input;
    for (const auto &layer : net.layers())
        x = apply_layer<Scalar>(layer, x);
    return x;
}

inline Vector evaluate(const Network &net, const Vector &input) { return evaluate<double>(net, input); }

/// Values after every layer; element 0 is the input itself.
std::vector<Vector> evaluate_trace(const Network &net, const Vector &input);

/// Generator-defined perturbation set around an instance: the latent code
/// mu + z ⊙ sigma_scale with ||z||_inf <= delta is fed to the generator
/// together with the instance.
struct LatentPerturbationSpec {
    Network generator;
    Vector instance;     // x̄, may be empty
    Vector mu;           // μ(x̄)
    Vector sigma_scale;  // σ(x̄), entrywise >= 0
    double delta = 0.0;

    int latent_dim() const { return static_cast<int>(mu.size()); }
    void validate() const;
};

/// Builds z ↦ f(G(x̄, μ + z ⊙ σ)) as a single network over the latent code,
/// folding the instance and the latent affine map into the first affine layer.
Network concatenate(const LatentPerturbationSpec &spec, const Network &classifier);

}  // namespace sigverify
