#include "sigverify/harness.hpp"

#include <cmath>
#include <ostream>

namespace sigverify {

using nlohmann::json;

const char *mode_name(Mode m)
{
    switch (m) {
    case Mode::DeepPoly:
        return "deeppoly";
    case Mode::NoCegar:
        return "nocegar";
    case Mode::Cegar:
        return "cegar";
    case Mode::Eager:
        return "eager";
    }
    return "?";
}

Mode parse_mode(const std::string &s)
{
    if (s == "deeppoly")
        return Mode::DeepPoly;
    if (s == "nocegar")
        return Mode::NoCegar;
    if (s == "cegar")
        return Mode::Cegar;
    if (s == "eager")
        return Mode::Eager;
    throw Error("unknown mode \"" + s + "\"");
}

void RunConfig::validate() const
{
    if (!(step > 0.0))
        throw Error("step must be positive");
    if (!(timeout > 0.0))
        throw Error("timeout must be positive");
    if (workers < 1)
        throw Error("workers must be at least 1");
    if (mode == Mode::Eager && eager_k < 2)
        throw Error("eager K must be at least 2");
    if (!(max_delta > 0.0))
        throw Error("max_delta must be positive");
    refinement().validate();
}

RefinementConfig RunConfig::refinement() const
{
    RefinementConfig r;
    r.m = m;
    r.k = k;
    r.timeout = timeout;
    r.grid_check = grid_check;
    r.solver.workers = workers;
    return r;
}

json RunConfig::to_json() const
{
    json j = {{"mode", mode_name(mode)}, {"timeout", timeout}, {"workers", workers}, {"seed", seed}, {"step", step},
              {"max_delta", max_delta}};
    if (mode == Mode::Cegar) {
        j["m"] = m;
        j["k"] = k;
    }
    if (mode == Mode::Eager)
        j["eager_k"] = eager_k;
    return j;
}

Property Instance::at_radius(double delta) const
{
    Property p = property;
    p.input = InputBox::around(center, delta);
    return p;
}

Instance make_instance(std::string name, Network net, Property prop)
{
    prop.validate(net.input_dim(), net.output_dim());
    Instance inst;
    inst.name = std::move(name);
    inst.center = (prop.input.lo + prop.input.hi) / 2.0;
    inst.network = std::make_shared<const Network>(std::move(net));
    inst.property = std::move(prop);
    return inst;
}

Instance load_instance(const std::filesystem::path &network, const std::filesystem::path &spec)
{
    Network classifier = load_network(network);
    PropertyFile pf = load_property(spec, classifier.output_dim());
    if (pf.latent) {
        Network composed = concatenate(*pf.latent, classifier);
        Instance inst = make_instance(spec.stem().string(), std::move(composed), std::move(pf.property));
        inst.latent = true;
        return inst;
    }
    return make_instance(spec.stem().string(), std::move(classifier), std::move(pf.property));
}

json VerdictReport::to_json() const
{
    json j = {{"format_version", kReportFormatVersion},
              {"instance", instance},
              {"config", config.to_json()},
              {"outcome", verdict_name(outcome)},
              {"wall_time", wall_time},
              {"refinement_rounds", refinement_rounds},
              {"bounds_added", bounds_added},
              {"solver_calls", solver_calls}};
    j["delta"] = delta ? json(*delta) : json(nullptr);
    j["certified_delta"] = certified_delta ? json(*certified_delta) : json(nullptr);
    if (witness) {
        j["witness"] = {{"input", std::vector<double>(witness->data(), witness->data() + witness->size())},
                        {"label", witness_label}};
    } else {
        j["witness"] = nullptr;
    }
    json rs = json::array();
    for (const RoundRecord &r : rounds)
        rs.push_back({{"round", r.round},
                      {"solver_status", solve_status_name(r.solver_status)},
                      {"solver_time", r.solver_time},
                      {"nodes", r.nodes},
                      {"label", r.label},
                      {"violated", r.violated},
                      {"added", r.added},
                      {"budget", r.budget},
                      {"max_gap", r.max_gap}});
    j["rounds"] = std::move(rs);
    json ss = json::array();
    for (const RadiusStep &s : steps)
        ss.push_back({{"delta", s.delta},
                      {"outcome", verdict_name(s.outcome)},
                      {"time", s.time},
                      {"refinements", s.refinements}});
    j["steps"] = std::move(ss);
    j["message"] = message;
    return j;
}

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Verdict from_solver(const SolveOutcome &s, const VerificationTuple &tuple, const Property &prop, VerdictReport &rep)
{
    rep.solver_calls = 1;
    if (s.status == SolveStatus::Proven)
        return Verdict::Robust;
    if (s.status == SolveStatus::Timeout) {
        rep.message = s.message;
        return Verdict::Timeout;
    }
    const Vector x = witness_input(tuple, prop, s.counterexample);
    if (concrete_counterexample_check(*tuple.network, prop, x)) {
        rep.witness = x;
        rep.witness_label = flipped_label(prop, evaluate(*tuple.network, x)).value_or(-1);
        return Verdict::NotRobust;
    }
    rep.message = "spurious counterexample; this mode does not refine";
    return Verdict::Unknown;
}

}  // namespace

VerdictReport run_single(const Instance &inst, const Property &prop, const RunConfig &config)
{
    config.validate();
    const auto start = Clock::now();
    VerdictReport rep;
    rep.instance = inst.name;
    rep.config = config;
    rep.delta = ((prop.input.hi - prop.input.lo) / 2.0).maxCoeff();

    if (prop.adversarial.empty()) {
        rep.outcome = Verdict::Robust;
        rep.message = "empty adversarial set";
        rep.wall_time = seconds_since(start);
        return rep;
    }

    auto tuple = std::make_shared<const VerificationTuple>(encode(inst.network, prop));
    switch (config.mode) {
    case Mode::DeepPoly: {
        const BoundsResult bounds = propagate_bounds(*tuple, prop.input);
        rep.outcome = Verdict::Robust;
        for (int j : prop.adversarial) {
            Vector c = Vector::Zero(inst.network->output_dim());
            c[prop.label] = 1.0;
            c[j] = -1.0;
            if (!(lower_bound_of_output_form(*tuple, bounds, c) > 0.0)) {
                rep.outcome = Verdict::Unknown;
                rep.message = "margin against label " + std::to_string(j) + " not certified";
                break;
            }
        }
        break;
    }
    case Mode::NoCegar:
    case Mode::Eager: {
        const BoundsResult bounds = propagate_bounds(*tuple, prop.input);
        AbstractModel model = abstr(tuple, bounds);
        if (config.mode == Mode::Eager)
            model = with_eager_chains(std::move(model), config.eager_k);
        SolverOptions opts;
        opts.workers = config.workers;
        const SolveOutcome s = prove(model, prop, Deadline::in(config.timeout), opts);
        rep.outcome = from_solver(s, *tuple, prop, rep);
        break;
    }
    case Mode::Cegar: {
        const CegarResult r = vnn_cegar(tuple, prop, config.refinement());
        rep.outcome = r.verdict;
        rep.rounds = r.trace.rounds;
        rep.refinement_rounds = r.trace.refinements();
        rep.bounds_added = r.trace.bounds_added();
        rep.solver_calls = static_cast<long>(r.trace.rounds.size());
        rep.message = r.trace.message;
        if (r.verdict == Verdict::NotRobust) {
            rep.witness = r.witness;
            rep.witness_label = r.witness_label;
        }
        break;
    }
    }
    rep.wall_time = seconds_since(start);
    return rep;
}

VerdictReport radius_search(const Instance &inst, const RunConfig &config)
{
    config.validate();
    const auto start = Clock::now();
    VerdictReport rep;
    rep.instance = inst.name;
    rep.config = config;
    rep.certified_delta = 0.0;
    rep.outcome = Verdict::Robust;
    for (int n = 1;; ++n) {
        const double delta = n * config.step;
        if (delta > config.max_delta * (1 + 1e-12)) {
            rep.message = "reached max_delta";
            break;
        }
        const VerdictReport r = run_single(inst, inst.at_radius(delta), config);
        rep.steps.push_back({delta, r.outcome, r.wall_time, r.refinement_rounds});
        rep.refinement_rounds += r.refinement_rounds;
        rep.bounds_added += r.bounds_added;
        rep.solver_calls += r.solver_calls;
        if (r.outcome != Verdict::Robust) {
            rep.outcome = r.outcome;
            rep.delta = delta;
            rep.witness = r.witness;
            rep.witness_label = r.witness_label;
            rep.message = r.message;
            break;
        }
        rep.certified_delta = delta;
    }
    rep.wall_time = seconds_since(start);
    return rep;
}

std::vector<SweepRow> sweep_mk(const std::vector<Instance> &instances, const std::vector<int> &ms,
                               const std::vector<double> &ks, const RunConfig &config, const SweepObserver &observer)
{
    if (ms.empty() || ks.empty())
        throw Error("sweep_mk needs at least one m and one k");
    std::vector<SweepRow> rows;
    if (instances.empty())
        return rows;
    for (int m : ms) {
        for (double k : ks) {
            RunConfig c = config;
            c.mode = Mode::Cegar;
            c.m = m;
            c.k = k;
            SweepRow row{m, k, 0, static_cast<int>(instances.size()), 0.0, 0.0};
            for (const Instance &inst : instances) {
                const VerdictReport r = run_single(inst, c);
                if (observer)
                    observer(row, inst, r);
                if (r.outcome != Verdict::Robust && r.outcome != Verdict::NotRobust)
                    continue;
                ++row.solved;
                row.mean_time += r.wall_time;
                row.mean_refinements += r.refinement_rounds;
            }
            if (row.solved > 0) {
                row.mean_time /= row.solved;
                row.mean_refinements /= row.solved;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow> &rows, std::ostream &out)
{
    out << "m,k,# solved,time(s),# ref.\n";
    for (const SweepRow &r : rows)
        out << r.m << ',' << r.k << ',' << r.solved << ',' << r.mean_time << ',' << r.mean_refinements << '\n';
}

Network random_network(std::mt19937_64 &rng, const std::vector<int> &widths, SShapedKind act, double weight_scale)
{
    if (widths.size() < 2)
        throw Error("random_network needs input and output widths");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const int in = widths[i];
        const int out = widths[i + 1];
        Matrix w(out, in);
        Vector b(out);
        const double s = weight_scale / std::sqrt(static_cast<double>(in));
        for (int r = 0; r < out; ++r) {
            for (int c = 0; c < in; ++c)
                w(r, c) = s * normal(rng);
            b[r] = 0.5 * weight_scale * normal(rng);
        }
        layers.emplace_back(AffineLayer{std::move(w), std::move(b)});
        if (i + 2 < widths.size())
            layers.emplace_back(SShapedLayer{act});
    }
    return Network(widths.front(), std::move(layers));
}

Instance random_instance(std::uint64_t seed, const std::vector<int> &widths, SShapedKind act, double radius,
                         double weight_scale)
{
    std::mt19937_64 rng(seed);
    Network net = random_network(rng, widths, act, weight_scale);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector center(widths.front());
    for (Eigen::Index i = 0; i < center.size(); ++i)
        center[i] = unif(rng);
    const Vector y = evaluate(net, center);
    Eigen::Index label = 0;
    y.maxCoeff(&label);
    Property prop = Property::robustness(InputBox::around(center, radius), static_cast<int>(label), net.output_dim());
    return make_instance("random-" + std::to_string(seed), std::move(net), std::move(prop));
}

int exit_code(Verdict v)
{
    switch (v) {
    case Verdict::Robust:
        return 0;
    case Verdict::NotRobust:
        return 2;
    case Verdict::Timeout:
    case Verdict::Unknown:
        return 3;
    }
    return 3;
}

}  // namespace sigverify
