#pragma once

#include "sigverify/cegar.hpp"
#include "sigverify/io.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sigverify {

inline constexpr int kReportFormatVersion = 1;

enum class Mode { DeepPoly, NoCegar, Cegar, Eager };

const char *mode_name(Mode m);
Mode parse_mode(const std::string &s);

struct RunConfig {
    Mode mode = Mode::Cegar;
    int eager_k = 2;
    double timeout = 1200.0;  // seconds per query
    int m = 30;
    double k = 2.0;
    double step = 0.02;
    double max_delta = 2.0;  // radius search stops here
    int workers = 1;
    std::uint64_t seed = 0;
    bool grid_check = false;

    void validate() const;
    RefinementConfig refinement() const;
    nlohmann::json to_json() const;
};

/// A network plus a property whose input region can be rescaled. Latent-ball
/// instances hold the composed network over the latent code.
struct Instance {
    std::string name;
    std::shared_ptr<const Network> network;
    Property property;
    bool latent = false;
    Vector center;  // box midpoint, or 0 in latent space

    /// Same label and targets, input region center ± delta.
    Property at_radius(double delta) const;
};

Instance make_instance(std::string name, Network net, Property prop);
Instance load_instance(const std::filesystem::path &network, const std::filesystem::path &spec);

struct RadiusStep {
    double delta = 0.0;
    Verdict outcome = Verdict::Timeout;
    double time = 0.0;
    int refinements = 0;
};

struct VerdictReport {
    std::string instance;
    RunConfig config;
    Verdict outcome = Verdict::Timeout;
    double wall_time = 0.0;
    int refinement_rounds = 0;
    int bounds_added = 0;
    long solver_calls = 0;
    std::optional<double> delta;            // radius queried by a single run
    std::optional<double> certified_delta;  // radius search only
    std::optional<Vector> witness;
    int witness_label = -1;
    std::vector<RoundRecord> rounds;
    std::vector<RadiusStep> steps;
    std::string message;

    nlohmann::json to_json() const;
};

/// One query in the configured mode.
VerdictReport run_single(const Instance &inst, const Property &prop, const RunConfig &config);
inline VerdictReport run_single(const Instance &inst, const RunConfig &config)
{
    return run_single(inst, inst.property, config);
}

/// Certifies step, 2·step, ... and stops at the first radius that is not
/// proven robust or at max_delta.
VerdictReport radius_search(const Instance &inst, const RunConfig &config);

struct SweepRow {
    int m = 0;
    double k = 0.0;
    int solved = 0;
    int total = 0;
    double mean_time = 0.0;         // over solved instances
    double mean_refinements = 0.0;  // over solved instances
};

/// Called with every per-instance report of a sweep.
using SweepObserver = std::function<void(const SweepRow &row, const Instance &inst, const VerdictReport &report)>;

std::vector<SweepRow> sweep_mk(const std::vector<Instance> &instances, const std::vector<int> &ms,
                               const std::vector<double> &ks, const RunConfig &config,
                               const SweepObserver &observer = {});

void write_sweep_csv(const std::vector<SweepRow> &rows, std::ostream &out);

/// Fully connected network with the given widths; hidden layers use `act`.
Network random_network(std::mt19937_64 &rng, const std::vector<int> &widths, SShapedKind act,
                       double weight_scale = 1.0);

/// Random network and a box property around a random center labeled with the network's own prediction.
Instance random_instance(std::uint64_t seed, const std::vector<int> &widths, SShapedKind act, double radius,
                         double weight_scale = 1.0);

/// Process exit code for a verdict: 0 robust, 2 not_robust, 3 timeout/unknown.
int exit_code(Verdict v);

}  // namespace sigverify
