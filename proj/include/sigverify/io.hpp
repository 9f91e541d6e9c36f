#pragma once

#include "sigverify/abstraction.hpp"
#include "sigverify/network.hpp"
#include "sigverify/problem.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace sigverify {

/// Shortest exact text for a double ("%a" hex-float).
std::string hexfloat(double x);

/// Accepts JSON numbers and strings holding hex-float or decimal text.
double parse_real(const nlohmann::json &j, const std::string &path);

nlohmann::json network_to_json(const Network &net);
Network network_from_json(const nlohmann::json &j);

void save_network(const Network &net, std::ostream &out);
void save_network(const Network &net, const std::filesystem::path &path);
Network load_network(std::istream &in);
Network load_network(const std::filesystem::path &path);

/// Latent perturbation spec: {"generator": path | network, "instance": [...], "mu": [...], "sigma": [...]}.
/// Relative generator paths resolve against `base_dir`. `delta` comes from the property.
LatentPerturbationSpec latent_spec_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir,
                                             double delta);
nlohmann::json latent_spec_to_json(const LatentPerturbationSpec &spec);

/// Parsed property file. Latent-ball properties carry the spec to compose with
/// the classifier; their input box is the latent box [−δ, δ]^d.
struct PropertyFile {
    Property property;
    std::optional<LatentPerturbationSpec> latent;
};

PropertyFile property_from_json(const nlohmann::json &j, int num_outputs, const std::filesystem::path &base_dir);
PropertyFile load_property(const std::filesystem::path &path, int num_outputs);
nlohmann::json property_to_json(const Property &prop);

/// Abstraction export: the neuron records plus a LeakyReLU network per refinement bound.
nlohmann::json abstraction_to_json(const AbstractModel &model);

nlohmann::json read_json(const std::filesystem::path &path);

}  // namespace sigverify
