#include "sigverify/network.hpp"

namespace sigverify {

bool is_activation(const Layer &layer) { return !std::holds_alternative<AffineLayer>(layer); }

std::string layer_kind_name(const Layer &layer)
{
    return std::visit(
        [](const auto &l) -> std::string {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, AffineLayer>)
                return "affine";
            else if constexpr (std::is_same_v<T, ReluLayer>)
                return "relu";
            else if constexpr (std::is_same_v<T, LeakyReluLayer>)
                return "leaky_relu";
            else
                return l.family == SShapedKind::Sigmoid ? "sigmoid" : "tanh";
        },
        layer);
}

int layer_output_dim(const Layer &layer, int input_dim)
{
    if (const auto *affine = std::get_if<AffineLayer>(&layer))
        return static_cast<int>(affine->weights.rows());
    return input_dim;
}

Network::Network(int input_dim, std::vector<Layer> layers) : input_dim_(input_dim), layers_(std::move(layers))
{
    if (input_dim_ <= 0)
        throw DimensionError(0, "input dimension must be positive");
    if (layers_.empty())
        throw DimensionError(0, "network needs at least one layer");
    dims_.reserve(layers_.size() + 1);
    dims_.push_back(input_dim_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const int layer_index = static_cast<int>(i);
        const int in = dims_.back();
        if (const auto *affine = std::get_if<AffineLayer>(&layers_[i])) {
            if (affine->weights.cols() != in)
                throw DimensionError(layer_index, "weights have " + std::to_string(affine->weights.cols()) +
                                                      " columns, expected " + std::to_string(in));
            if (affine->weights.rows() == 0)
                throw DimensionError(layer_index, "affine layer has no outputs");
            if (affine->bias.size() != affine->weights.rows())
                throw DimensionError(layer_index, "bias length " + std::to_string(affine->bias.size()) +
                                                      " differs from row count " +
                                                      std::to_string(affine->weights.rows()));
            if (!affine->weights.allFinite() || !affine->bias.allFinite())
                throw DimensionError(layer_index, "non-finite parameter");
        } else if (const auto *leaky = std::get_if<LeakyReluLayer>(&layers_[i])) {
            if (!(leaky->slope >= 0.0) || !std::isfinite(leaky->slope))
                throw DimensionError(layer_index, "leaky_relu slope must be a finite value >= 0");
        }
        dims_.push_back(layer_output_dim(layers_[i], in));
    }
}

int Network::count_activation_neurons() const
{
    int count = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (is_activation(layers_[i]))
            count += dims_[i + 1];
    return count;
}

int Network::count_sshaped_neurons() const
{
    int count = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (std::holds_alternative<SShapedLayer>(layers_[i]))
            count += dims_[i + 1];
    return count;
}

bool operator==(const Network &a, const Network &b)
{
    if (a.input_dim_ != b.input_dim_ || a.layers_.size() != b.layers_.size())
        return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        const Layer &la = a.layers_[i];
        const Layer &lb = b.layers_[i];
        if (la.index() != lb.index())
            return false;
        if (const auto *x = std::get_if<AffineLayer>(&la)) {
            const auto &y = std::get<AffineLayer>(lb);
            if (x->weights.rows() != y.weights.rows() || x->weights.cols() != y.weights.cols() ||
                x->weights != y.weights || x->bias != y.bias)
                return false;
        } else if (const auto *x = std::get_if<LeakyReluLayer>(&la)) {
            if (x->slope != std::get<LeakyReluLayer>(lb).slope)
                return false;
        } else if (const auto *x = std::get_if<SShapedLayer>(&la)) {
            if (x->family != std::get<SShapedLayer>(lb).family)
                return false;
        }
    }
    return true;
}

std::vector<Vector> evaluate_trace(const Network &net, const Vector &input)
{
    if (input.size() != net.input_dim())
        throw DimensionError(0, "input has " + std::to_string(input.size()) + " entries, expected " +
                                    std::to_string(net.input_dim()));
    std::vector<Vector> trace;
    trace.reserve(net.size() + 1);
    trace.push_back(input);
    for (const auto &layer : net.layers())
        trace.push_back(apply_layer<double>(layer, trace.back()));
    return trace;
}

void LatentPerturbationSpec::validate() const
{
    if (mu.size() == 0)
        throw DimensionError(0, "latent dimension must be positive");
    if (sigma_scale.size() != mu.size())
        throw DimensionError(0, "sigma_scale has " + std::to_string(sigma_scale.size()) + " entries, mu has " +
                                    std::to_string(mu.size()));
    if ((sigma_scale.array() < 0.0).any() || !sigma_scale.allFinite() || !mu.allFinite() || !instance.allFinite())
        throw DimensionError(0, "sigma_scale must be finite and non-negative; mu and instance finite");
    if (instance.size() + mu.size() != generator.input_dim())
        throw DimensionError(0, "generator expects " + std::to_string(generator.input_dim()) +
                                    " inputs, instance + latent provide " +
                                    std::to_string(instance.size() + mu.size()));
    if (!(delta >= 0.0))
        throw DimensionError(0, "delta must be >= 0");
}

Network concatenate(const LatentPerturbationSpec &spec, const Network &classifier)
{
    spec.validate();
    if (spec.generator.output_dim() != classifier.input_dim())
        throw DimensionError(static_cast<int>(spec.generator.size()),
                             "generator emits " + std::to_string(spec.generator.output_dim()) +
                                 " values, classifier expects " + std::to_string(classifier.input_dim()));

    const auto n_inst = spec.instance.size();
    const auto n_lat = spec.mu.size();
    std::vector<Layer> layers;
    layers.reserve(spec.generator.size() + classifier.size() + 1);

    auto generator_layers = spec.generator.layers().begin();
    if (const auto *first = std::get_if<AffineLayer>(&spec.generator.layers().front())) {
        // W [x̄; μ + σ⊙z] + b = (W_z diag σ) z + (W_x x̄ + W_z μ + b)
        const Matrix &w = first->weights;
        AffineLayer merged;
        merged.weights = w.rightCols(n_lat) * spec.sigma_scale.asDiagonal();
        merged.bias = first->bias + w.rightCols(n_lat) * spec.mu;
        if (n_inst > 0)
            merged.bias += w.leftCols(n_inst) * spec.instance;
        layers.emplace_back(std::move(merged));
        ++generator_layers;
    } else {
        AffineLayer lift;
        lift.weights = Matrix::Zero(n_inst + n_lat, n_lat);
        lift.weights.bottomRows(n_lat) = spec.sigma_scale.asDiagonal();
        lift.bias.resize(n_inst + n_lat);
        lift.bias << spec.instance, spec.mu;
        layers.emplace_back(std::move(lift));
    }
    layers.insert(layers.end(), generator_layers, spec.generator.layers().end());
    layers.insert(layers.end(), classifier.layers().begin(), classifier.layers().end());
    return Network(static_cast<int>(n_lat), std::move(layers));
}

}  // namespace sigverify
