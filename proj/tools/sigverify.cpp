// Command-line front end: verify, radius-search, sweep-mk, random-instance.

#include "sigverify/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace sigverify;

namespace {

struct Common {
    std::string network;
    std::string spec;
    std::string mode = "cegar";
    int eager_k = 2;
    double timeout = 1200.0;
    int m = 30;
    double k = 2.0;
    int workers = 1;
    std::uint64_t seed = 0;
    std::string report;
    bool grid_check = false;
};

void add_common(CLI::App *app, Common &c, bool single = true)
{
    if (single) {
        app->add_option("--network", c.network, "Classifier network (JSON)")->required()->check(CLI::ExistingFile);
        app->add_option("--spec", c.spec, "Property file (JSON)")->required()->check(CLI::ExistingFile);
    }
    app->add_option("--mode", c.mode, "deeppoly | nocegar | cegar | eager")
        ->check(CLI::IsMember({"deeppoly", "nocegar", "cegar", "eager"}));
    app->add_option("--eager-k", c.eager_k, "Segments per eager chain")->check(CLI::Range(2, 1000));
    app->add_option("--timeout", c.timeout, "Seconds per query")->check(CLI::PositiveNumber);
    if (single) {
        app->add_option("--m", c.m, "Bounds allowed in the first refinement round")->check(CLI::PositiveNumber);
        app->add_option("--k", c.k, "Growth factor of the refinement budget");
    }
    app->add_option("--workers", c.workers, "Branch-and-bound workers")->check(CLI::Range(1, 256));
    app->add_option("--seed", c.seed, "Seed recorded in the report");
    app->add_option("--report", c.report, "Write the JSON report here");
    app->add_flag("--grid-check", c.grid_check, "Grid-check every separating bound");
}

RunConfig to_config(const Common &c)
{
    RunConfig cfg;
    cfg.mode = parse_mode(c.mode);
    cfg.eager_k = c.eager_k;
    cfg.timeout = c.timeout;
    cfg.m = c.m;
    cfg.k = c.k;
    cfg.workers = c.workers;
    cfg.seed = c.seed;
    cfg.grid_check = c.grid_check;
    cfg.validate();
    return cfg;
}

void emit(const VerdictReport &rep, const std::string &path)
{
    const std::string text = rep.to_json().dump(2);
    if (path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    out << text << '\n';
    std::cout << verdict_name(rep.outcome);
    if (rep.certified_delta)
        std::cout << " certified_delta=" << *rep.certified_delta;
    std::cout << " time=" << rep.wall_time << "s\n";
}

std::vector<double> parse_list(const std::string &s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_widths(const std::string &s)
{
    std::vector<int> out;
    for (double v : parse_list(s))
        out.push_back(static_cast<int>(v));
    return out;
}

}  // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Robustness verifier for networks with sigmoid and tanh activations"};
    app.require_subcommand(1);

    Common verify_opts;
    std::string export_path;
    auto *verify = app.add_subcommand("verify", "Verify one property");
    add_common(verify, verify_opts);
    verify->add_option("--export-abstraction", export_path,
                       "cegar mode: write the final abstraction with LeakyReLU gadgets");

    Common radius_opts;
    double step = 0.02;
    double max_delta = 2.0;
    auto *radius = app.add_subcommand("radius-search", "Largest certified radius in steps");
    add_common(radius, radius_opts);
    radius->add_option("--step", step, "Radius increment")->check(CLI::PositiveNumber);
    radius->add_option("--max-delta", max_delta, "Stop searching at this radius")->check(CLI::PositiveNumber);

    Common sweep_opts;
    std::vector<std::string> instances;
    std::string m_list = "10,30,50";
    std::string k_list = "1.5,2";
    std::string csv;
    auto *sweep = app.add_subcommand("sweep-mk", "Refinement-budget sweep over m and k");
    add_common(sweep, sweep_opts, false);
    sweep->add_option("--instance", instances, "NETWORK,SPEC pair (repeatable)");
    sweep->add_option("--m", m_list, "Comma-separated m values");
    sweep->add_option("--k", k_list, "Comma-separated k values");
    sweep->add_option("--csv", csv, "Write the table here instead of stdout");

    std::uint64_t gen_seed = 0;
    std::string widths = "2,8,8,3";
    std::string family = "sigmoid";
    double gen_radius = 0.05;
    double weight_scale = 2.0;
    std::string out_dir = ".";
    auto *gen = app.add_subcommand("random-instance", "Write a random network and box property");
    gen->add_option("--seed", gen_seed, "Generator seed")->required();
    gen->add_option("--widths", widths, "Layer widths, input first");
    gen->add_option("--family", family, "sigmoid | tanh")->check(CLI::IsMember({"sigmoid", "tanh"}));
    gen->add_option("--radius", gen_radius, "Half-width of the input box")->check(CLI::NonNegativeNumber);
    gen->add_option("--weight-scale", weight_scale, "Scale of the random weights")->check(CLI::PositiveNumber);
    gen->add_option("--out-dir", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*verify) {
            const RunConfig cfg = to_config(verify_opts);
            const Instance inst = load_instance(verify_opts.network, verify_opts.spec);
            VerdictReport rep;
            if (!export_path.empty() && cfg.mode == Mode::Cegar) {
                auto tuple = std::make_shared<const VerificationTuple>(encode(inst.network, inst.property));
                std::optional<AbstractModel> last;
                auto observer = [&](const AbstractModel &, const Assignment &, const RefineResult &r) {
                    last = r.model;
                };
                rep = run_single(inst, cfg);
                (void)vnn_cegar(tuple, inst.property, cfg.refinement(), observer);
                if (!last)
                    last = abstr(tuple, propagate_bounds(*tuple, inst.property.input));
                std::ofstream(export_path) << abstraction_to_json(*last).dump(1) << '\n';
            } else {
                rep = run_single(inst, cfg);
            }
            emit(rep, verify_opts.report);
            return exit_code(rep.outcome);
        }
        if (*radius) {
            RunConfig cfg = to_config(radius_opts);
            cfg.step = step;
            cfg.max_delta = max_delta;
            cfg.validate();
            const VerdictReport rep = radius_search(load_instance(radius_opts.network, radius_opts.spec), cfg);
            emit(rep, radius_opts.report);
            return 0;
        }
        if (*sweep) {
            const RunConfig cfg = to_config(sweep_opts);
            std::vector<Instance> loaded;
            for (const std::string &pair : instances) {
                const auto comma = pair.find(',');
                if (comma == std::string::npos)
                    throw Error("--instance expects NETWORK,SPEC");
                loaded.push_back(load_instance(pair.substr(0, comma), pair.substr(comma + 1)));
            }
            std::vector<int> ms;
            for (double v : parse_list(m_list))
                ms.push_back(static_cast<int>(v));
            const auto rows = sweep_mk(loaded, ms, parse_list(k_list), cfg);
            if (csv.empty()) {
                write_sweep_csv(rows, std::cout);
            } else {
                std::ofstream out(csv);
                write_sweep_csv(rows, out);
            }
            return 0;
        }
        if (*gen) {
            const Instance inst = random_instance(
                gen_seed, parse_widths(widths), family == "tanh" ? SShapedKind::Tanh : SShapedKind::Sigmoid,
                gen_radius, weight_scale);
            const std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            const std::string stem = "random-" + std::to_string(gen_seed);
            save_network(*inst.network, dir / (stem + ".network.json"));
            std::ofstream(dir / (stem + ".property.json")) << property_to_json(inst.property).dump(1) << '\n';
            std::cout << (dir / stem).string() << '\n';
            return 0;
        }
    } catch (const SchemaError &e) {
        std::cerr << "schema error at " << (e.path().empty() ? "/" : e.path()) << ": " << e.what() << '\n';
        return 1;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
