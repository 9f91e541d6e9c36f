#include "sigverify/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sigverify {

using nlohmann::json;

std::string hexfloat(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

double parse_real(const json &j, const std::string &path)
{
    if (j.is_number())
        return j.get<double>();
    if (!j.is_string())
        throw SchemaError(path, "expected a number or a numeric string");
    const std::string &s = j.get_ref<const std::string &>();
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw SchemaError(path, "cannot parse \"" + s + "\" as a real number");
    return v;
}

namespace {

const json &member(const json &j, const char *key, const std::string &path)
{
    if (!j.is_object())
        throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end())
        throw SchemaError(path + "/" + key, "missing required member");
    return *it;
}

Vector vector_from_json(const json &j, const std::string &path)
{
    if (!j.is_array())
        throw SchemaError(path, "expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = parse_real(j[i], path + "/" + std::to_string(i));
    return v;
}

json vector_to_json(const Vector &v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(hexfloat(v[i]));
    return out;
}

int int_from_json(const json &j, const std::string &path)
{
    if (!j.is_number_integer())
        throw SchemaError(path, "expected an integer");
    return j.get<int>();
}

}  // namespace

json network_to_json(const Network &net)
{
    json layers = json::array();
    for (const Layer &layer : net.layers()) {
        json l = {{"kind", layer_kind_name(layer)}};
        if (const auto *affine = std::get_if<AffineLayer>(&layer)) {
            json rows = json::array();
            for (Eigen::Index r = 0; r < affine->weights.rows(); ++r)
                rows.push_back(vector_to_json(affine->weights.row(r).transpose()));
            l["weights"] = std::move(rows);
            l["bias"] = vector_to_json(affine->bias);
        } else if (const auto *leaky = std::get_if<LeakyReluLayer>(&layer)) {
            l["slope"] = hexfloat(leaky->slope);
        }
        layers.push_back(std::move(l));
    }
    return {{"input_dim", net.input_dim()}, {"layers", std::move(layers)}};
}

Network network_from_json(const json &j)
{
    const int input_dim = int_from_json(member(j, "input_dim", ""), "/input_dim");
    const json &layers = member(j, "layers", "");
    if (!layers.is_array())
        throw SchemaError("/layers", "expected an array");

    std::vector<Layer> out;
    int width = input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string path = "/layers/" + std::to_string(i);
        const json &l = layers[i];
        const json &kind_j = member(l, "kind", path);
        if (!kind_j.is_string())
            throw SchemaError(path + "/kind", "expected a string");
        const std::string kind = kind_j.get<std::string>();
        if (kind == "affine") {
            const json &w = member(l, "weights", path);
            if (!w.is_array() || w.empty())
                throw SchemaError(path + "/weights", "expected a non-empty array of rows");
            const Vector bias = vector_from_json(member(l, "bias", path), path + "/bias");
            const auto rows = static_cast<Eigen::Index>(w.size());
            if (bias.size() != rows)
                throw SchemaError(path + "/bias", "layer " + std::to_string(i) + ": bias length " +
                                                      std::to_string(bias.size()) + " differs from row count " +
                                                      std::to_string(rows));
            Matrix weights(rows, width);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const std::string rpath = path + "/weights/" + std::to_string(r);
                const Vector row = vector_from_json(w[r], rpath);
                if (row.size() != width)
                    throw SchemaError(rpath, "layer " + std::to_string(i) + ": row has " +
                                                 std::to_string(row.size()) + " entries, expected " +
                                                 std::to_string(width));
                weights.row(r) = row.transpose();
            }
            out.emplace_back(AffineLayer{std::move(weights), bias});
            width = static_cast<int>(rows);
        } else if (kind == "relu") {
            out.emplace_back(ReluLayer{});
        } else if (kind == "leaky_relu") {
            out.emplace_back(LeakyReluLayer{parse_real(member(l, "slope", path), path + "/slope")});
        } else if (kind == "sigmoid") {
            out.emplace_back(SShapedLayer{SShapedKind::Sigmoid});
        } else if (kind == "tanh") {
            out.emplace_back(SShapedLayer{SShapedKind::Tanh});
        } else {
            throw UnsupportedLayerError(path + "/kind", "unsupported layer kind \"" + kind + "\"");
        }
    }
    try {
        return Network(input_dim, std::move(out));
    } catch (const DimensionError &e) {
        throw SchemaError("/layers/" + std::to_string(e.layer()), e.what());
    }
}

void save_network(const Network &net, std::ostream &out) { out << network_to_json(net).dump(1) << '\n'; }

void save_network(const Network &net, const std::filesystem::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    save_network(net, out);
}

Network load_network(std::istream &in)
{
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return network_from_json(j);
}

json read_json(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw SchemaError("", path.string() + ": invalid JSON: " + e.what());
    }
}

Network load_network(const std::filesystem::path &path) { return network_from_json(read_json(path)); }

LatentPerturbationSpec latent_spec_from_json(const json &j, const std::filesystem::path &base_dir, double delta)
{
    const json &g = member(j, "generator", "");
    LatentPerturbationSpec spec{g.is_string() ? load_network(base_dir / g.get<std::string>()) : network_from_json(g),
                                {},
                                {},
                                {},
                                delta};
    if (auto it = j.find("instance"); it != j.end())
        spec.instance = vector_from_json(*it, "/instance");
    else
        spec.instance = Vector(0);
    spec.mu = vector_from_json(member(j, "mu", ""), "/mu");
    spec.sigma_scale = vector_from_json(member(j, "sigma", ""), "/sigma");
    try {
        spec.validate();
    } catch (const Error &e) {
        throw SchemaError("", e.what());
    }
    return spec;
}

json latent_spec_to_json(const LatentPerturbationSpec &spec)
{
    return {{"generator", network_to_json(spec.generator)},
            {"instance", vector_to_json(spec.instance)},
            {"mu", vector_to_json(spec.mu)},
            {"sigma", vector_to_json(spec.sigma_scale)}};
}

PropertyFile property_from_json(const json &j, int num_outputs, const std::filesystem::path &base_dir)
{
    PropertyFile out;
    const json &input = member(j, "input", "");
    const json &type = member(input, "type", "/input");
    if (type == "box") {
        out.property.input.lo = vector_from_json(member(input, "lo", "/input"), "/input/lo");
        out.property.input.hi = vector_from_json(member(input, "hi", "/input"), "/input/hi");
        if (out.property.input.lo.size() != out.property.input.hi.size())
            throw SchemaError("/input/hi", "lo and hi differ in length");
    } else if (type == "latent_ball") {
        const double delta = parse_real(member(input, "delta", "/input"), "/input/delta");
        if (!(delta >= 0.0) || !std::isfinite(delta))
            throw SchemaError("/input/delta", "delta must be finite and >= 0");
        const json &ref = member(input, "spec_ref", "/input");
        const json spec_json = ref.is_string() ? read_json(base_dir / ref.get<std::string>()) : ref;
        const auto spec_dir = ref.is_string() ? (base_dir / ref.get<std::string>()).parent_path() : base_dir;
        out.latent = latent_spec_from_json(spec_json, spec_dir, delta);
        out.property.input = InputBox::around(Vector::Zero(out.latent->latent_dim()), delta);
    } else {
        throw SchemaError("/input/type", "expected \"box\" or \"latent_ball\"");
    }

    const json &output = member(j, "output", "");
    out.property.label = int_from_json(member(output, "label", "/output"), "/output/label");
    if (auto it = output.find("targeted"); it != output.end() && !it->is_null()) {
        if (!it->is_array())
            throw SchemaError("/output/targeted", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i)
            out.property.adversarial.push_back(int_from_json((*it)[i], "/output/targeted/" + std::to_string(i)));
    } else {
        for (int k = 0; k < num_outputs; ++k)
            if (k != out.property.label)
                out.property.adversarial.push_back(k);
    }
    const int input_dim = static_cast<int>(out.property.input.lo.size());
    try {
        out.property.validate(input_dim, num_outputs);
    } catch (const Error &e) {
        throw SchemaError("/output", e.what());
    }
    return out;
}

PropertyFile load_property(const std::filesystem::path &path, int num_outputs)
{
    return property_from_json(read_json(path), num_outputs, path.parent_path());
}

json property_to_json(const Property &prop)
{
    return {{"input", {{"type", "box"}, {"lo", vector_to_json(prop.input.lo)}, {"hi", vector_to_json(prop.input.hi)}}},
            {"output", {{"label", prop.label}, {"targeted", prop.adversarial}}}};
}

json abstraction_to_json(const AbstractModel &model)
{
    json neurons = json::array();
    for (const SShapedNeuron &n : model.neurons) {
        json bounds = json::array();
        for (const PiecewiseLinearBound &b : n.refinements) {
            const LeakyReluGadget g = leaky_relu_encoding(b);
            bounds.push_back({{"direction", b.direction == BoundDirection::Lower ? "lower" : "upper"},
                              {"anchor", hexfloat(b.anchor)},
                              {"anchor_value", hexfloat(b.anchor_value)},
                              {"left_slope", hexfloat(b.left_slope)},
                              {"right_slope", hexfloat(b.right_slope)},
                              {"case", slope_case_name(b.slope_case)},
                              {"gadget", network_to_json(g.as_network())}});
        }
        neurons.push_back({{"input", n.input.index},
                           {"output", n.output.index},
                           {"family", std::string(n.family().name())},
                           {"interval", {hexfloat(n.interval.lo), hexfloat(n.interval.hi)}},
                           {"lower", {hexfloat(n.lower.slope), hexfloat(n.lower.intercept)}},
                           {"upper", {hexfloat(n.upper.slope), hexfloat(n.upper.intercept)}},
                           {"bounds", std::move(bounds)}});
    }
    return {{"network", network_to_json(*model.tuple->network)},
            {"generation", model.generation},
            {"sshaped", std::move(neurons)}};
}

}  // namespace sigverify
