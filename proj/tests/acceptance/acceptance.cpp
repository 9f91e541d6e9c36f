// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "lp_oracle.hpp"
#include "support.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace sigverify;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kGridSlack = 1e-9;
constexpr int kGridPoints = 1001;
constexpr double kGadgetTol = 1e-12;
constexpr double kResidualTol = 1e-7;
constexpr int kOraclePoints = 201;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double sep_tol(double q) { return kTolSepRel * std::max(1.0, std::abs(q)); }

SShapedFamily random_family(std::mt19937_64 &rng)
{
    return rng() % 2 ? SShapedFamily::sigmoid() : SShapedFamily::tanh();
}

Interval random_interval(std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> unif(-10.0, 10.0);
    double l = unif(rng), u = unif(rng);
    if (l > u)
        std::swap(l, u);
    if (u - l < 1e-3)
        u = std::min(10.0, l + 1e-3);
    return {l, u};
}

/// Worst signed gap of a bound against the family on an evenly spaced grid;
/// negative means the bound crosses the curve.
double worst_gap(const SShapedFamily &f, Interval iv, const std::function<double(double)> &h, bool lower)
{
    double worst = kInfinity;
    for (int i = 0; i < kGridPoints; ++i) {
        const double x = iv.lo + (iv.hi - iv.lo) * i / (kGridPoints - 1);
        const double g = lower ? f.value(x) - h(x) : h(x) - f.value(x);
        worst = std::min(worst, g);
    }
    return worst;
}

/// A point strictly off the curve at p; gaps range over several orders of magnitude.
double random_q(std::mt19937_64 &rng, const SShapedFamily &f, double p)
{
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    const double fp = f.value(p);
    const Interval range = f.output_range();
    const bool below = rng() % 2;
    const double room = below ? fp - range.lo : range.hi - fp;
    double gap;
    if (rng() % 4 == 0)
        gap = std::pow(10.0, -5.0 + 3.0 * frac(rng));  // 1e-5 .. 1e-2
    else
        gap = 1e-3 + std::max(0.0, room - 1e-3) * frac(rng);
    if (gap >= room)
        gap = 0.5 * room;
    return below ? fp - gap : fp + gap;
}

// Criterion 1 -----------------------------------------------------------------

Outcome bound_soundness()
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    int intervals = 0, bounds = 0, failures = 0;
    double worst = kInfinity;
    auto check = [&](double g) {
        ++bounds;
        worst = std::min(worst, g);
        failures += !(g >= -kGridSlack);
    };
    for (int i = 0; i < 1000; ++i) {
        const SShapedFamily f = random_family(rng);
        const Interval iv = random_interval(rng);
        ++intervals;

        const SShapedRelaxation r = initial_sshaped_relaxation(f, iv);
        check(worst_gap(f, iv, r.lower, true));
        check(worst_gap(f, iv, r.upper, false));

        for (int K : {2, 3}) {
            const EagerChains e = eager_abstraction(f, iv, K);
            check(worst_gap(f, iv, [&](double x) { return e.lower.value(x); }, true));
            check(worst_gap(f, iv, [&](double x) { return e.upper.value(x); }, false));
        }

        for (int s = 0; s < 4; ++s) {
            const double p = iv.lo + (iv.hi - iv.lo) * frac(rng);
            const double q = random_q(rng, f, p);
            SlopeChoice c;
            try {
                c = get_slopes(f, iv.lo, iv.hi, p, q);
            } catch (const NoSeparationError &) {
                continue;
            }
            const double fp = f.value(p);
            auto h = [&](double x) { return fp + (x <= p ? c.left_slope : c.right_slope) * (x - p); };
            check(worst_gap(f, iv, h, c.direction == BoundDirection::Lower));
        }
    }
    return {failures == 0, fmt("%d intervals, %d bounds, %d below slack, worst gap %.3e", intervals, bounds,
                               failures, worst)};
}

// Criterion 2 -----------------------------------------------------------------

Outcome separation()
{
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    slope_statistics().reset();
    std::array<long, kSlopeCaseCount> cases{};
    int draws = 0, not_anchored = 0, thin = 0, unsound = 0, refused = 0;
    double min_ratio = kInfinity;
    while (draws < 10000) {
        const SShapedFamily f = random_family(rng);
        const Interval iv = random_interval(rng);
        const double p = iv.lo + (iv.hi - iv.lo) * frac(rng);
        const double q = random_q(rng, f, p);
        if (std::abs(q - f.value(p)) <= kTolAct)
            continue;  // not a valid draw: on the curve within tolerance
        ++draws;
        SlopeChoice c;
        try {
            c = get_slopes(f, iv.lo, iv.hi, p, q);
        } catch (const NoSeparationError &) {
            ++refused;
            continue;
        }
        ++cases[static_cast<int>(c.slope_case)];
        const double fp = f.value(p);
        auto h = [&](double x) { return fp + (x <= p ? c.left_slope : c.right_slope) * (x - p); };
        const bool lower = c.direction == BoundDirection::Lower;
        not_anchored += h(p) != fp;
        const double margin = lower ? h(p) - q : q - h(p);
        min_ratio = std::min(min_ratio, margin / sep_tol(q));
        thin += !(margin >= sep_tol(q));
        unsound += !(worst_gap(f, iv, h, lower) >= -kGridSlack);
    }
    bool every_case = true;
    std::ostringstream hist;
    for (SlopeCase sc : {SlopeCase::TangentMinSlope, SlopeCase::TangentSecant, SlopeCase::Construction,
                         SlopeCase::SecantSecant, SlopeCase::TangentTangent}) {
        const long counted = slope_statistics()[sc];
        every_case = every_case && counted >= 100 && cases[static_cast<int>(sc)] >= 100;
        hist << ' ' << static_cast<int>(sc) << ':' << counted;
    }
    const bool ok = not_anchored == 0 && thin == 0 && unsound == 0 && refused == 0 && every_case &&
                    slope_statistics().grid_failures.load() == 0;
    return {ok, fmt("%d draws, refused %d, off-anchor %d, margin<tol_sep %d, unsound %d, min margin/tol_sep %.3g, "
                    "fallback %ld, cases",
                    draws, refused, not_anchored, thin, unsound, min_ratio, cases[0]) +
                    hist.str()};
}

// Budget law, shared by criteria 3, 4 and 7 ---------------------------------------

/// floor(m·kⁱ) for integer k, exact in 128-bit arithmetic (saturates far above any real budget).
__int128 exact_budget(int m, int k, int round)
{
    __int128 b = m;
    for (int i = 0; i < round && b < (static_cast<__int128>(1) << 100); ++i)
        b *= k;
    return b;
}

struct BudgetLedger {
    long rounds = 0;
    long breaches = 0;
    void check(const std::vector<RoundRecord> &trace, int m, int k)
    {
        // The recorded budget is capped at 1e15; additions must respect the exact law.
        const __int128 cap = 1'000'000'000'000'000;
        for (const RoundRecord &r : trace) {
            ++rounds;
            const __int128 b = exact_budget(m, k, r.round);
            breaches += r.added > b || r.budget != std::min(b, cap);
        }
    }
};
BudgetLedger g_budget;

// Criterion 3 -----------------------------------------------------------------

/// True when some bound added by this refinement excludes (alpha[in], alpha[out]),
/// evaluated from the stored anchor and slopes.
bool excluded_by_new_bounds(const AbstractModel &before, const AbstractModel &after, const Assignment &alpha)
{
    for (std::size_t n = 0; n < after.neurons.size(); ++n) {
        const SShapedNeuron &na = after.neurons[n];
        const double x = alpha[na.input];
        const double y = alpha[na.output];
        for (std::size_t b = before.neurons[n].refinements.size(); b < na.refinements.size(); ++b) {
            const PiecewiseLinearBound &h = na.refinements[b];
            const double hx = h.anchor_value + (x <= h.anchor ? h.left_slope : h.right_slope) * (x - h.anchor);
            const double miss = h.direction == BoundDirection::Lower ? hx - y : y - hx;
            if (miss > kTolLp)
                return true;
        }
    }
    return false;
}

Outcome cegar_progress()
{
    int fixtures = 0, refinements = 0, failures = 0, solver_listed = 0;
    std::map<Verdict, int> verdicts;
    for (int s = 0; s < 200; ++s) {
        const std::uint64_t seed = 1000 + s;
        const SShapedKind kind = s % 4 == 3 ? SShapedKind::Tanh : SShapedKind::Sigmoid;
        const Instance inst = random_instance(seed, {2, 6, 6, 3}, kind, 0.2 + 0.1 * (s % 6), 4.0);
        ++fixtures;
        auto tuple = std::make_shared<const VerificationTuple>(encode(inst.network, inst.property));
        RefinementConfig cfg;
        cfg.m = 2 + s % 3;
        cfg.k = 2.0;
        cfg.timeout = 10;
        auto observer = [&](const AbstractModel &before, const Assignment &alpha, const RefineResult &r) {
            ++refinements;
            bool listed = false;
            for (const auto &v : abstract_violations(r.model, alpha, kTolLp))
                listed = listed || v.kind == AbstractViolation::Kind::Refinement;
            solver_listed += listed;
            failures += !(listed && excluded_by_new_bounds(before, r.model, alpha));
        };
        const CegarResult r = vnn_cegar(tuple, inst.property, cfg, observer);
        ++verdicts[r.verdict];
        g_budget.check(r.trace.rounds, cfg.m, 2);
    }
    return {failures == 0 && refinements > 0,
            fmt("%d fixtures, %d refinements, %d not excluded; verdicts robust %d, not_robust %d, timeout %d",
                fixtures, refinements, failures, verdicts[Verdict::Robust], verdicts[Verdict::NotRobust],
                verdicts[Verdict::Timeout])};
}

// Criterion 4 -----------------------------------------------------------------

struct LatentToy {
    LatentPerturbationSpec spec;
    Network classifier;
    Property property;  // over the latent code
    int neurons = 0;
    int sshaped = 0;
};

Matrix random_matrix(std::mt19937_64 &rng, int rows, int cols, double scale)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            w(r, c) = scale * normal(rng);
    return w;
}

Vector random_vector(std::mt19937_64 &rng, int n, double scale)
{
    return random_matrix(rng, n, 1, scale).col(0);
}

/// Generator with one S-shaped layer over x̄ and z, then a classifier whose
/// hidden layer is tanh, sigmoid or ReLU. At most 8 neurons, at most 4 S-shaped.
LatentToy latent_toy(std::mt19937_64 &rng, int index)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int latent = 1 + index % 2;
    const int instance = index % 3 == 0 ? 1 : 0;
    const int gen_hidden = 2;
    const int gen_out = 2;
    const SShapedKind gen_kind = index % 2 ? SShapedKind::Sigmoid : SShapedKind::Tanh;

    Network generator(instance + latent,
                      {AffineLayer{random_matrix(rng, gen_hidden, instance + latent, 2.0),
                                   random_vector(rng, gen_hidden, 0.5)},
                       SShapedLayer{gen_kind},
                       AffineLayer{random_matrix(rng, gen_out, gen_hidden, 2.0), random_vector(rng, gen_out, 0.5)}});
    Vector x_bar = random_vector(rng, instance, 1.0);
    Vector mu = random_vector(rng, latent, 0.3);
    Vector sigma(latent);
    for (int i = 0; i < latent; ++i)
        sigma[i] = 0.3 + unif(rng);
    const double delta = 0.1 + 0.9 * unif(rng);

    int hidden = 2;
    int sshaped = 4;
    Layer act = SShapedLayer{SShapedKind::Tanh};
    if (index % 3 == 1) {
        act = SShapedLayer{SShapedKind::Sigmoid};
    } else if (index % 3 == 2) {
        hidden = 4;
        sshaped = 2;
        act = ReluLayer{};
    }
    const int outputs = 2 + index % 2;
    Network classifier(gen_out,
                       {AffineLayer{random_matrix(rng, hidden, gen_out, 2.0), random_vector(rng, hidden, 0.5)}, act,
                        AffineLayer{random_matrix(rng, outputs, hidden, 2.0), random_vector(rng, outputs, 0.5)}});
    return LatentToy{LatentPerturbationSpec{std::move(generator), std::move(x_bar), std::move(mu), std::move(sigma), delta},
                     std::move(classifier), Property{}, gen_hidden + hidden, sshaped};
}

/// The two-stage pipeline: z ↦ f(G(x̄, μ + z ⊙ σ)).
Vector two_stage(const LatentToy &t, const Vector &z)
{
    Vector g(t.spec.instance.size() + t.spec.mu.size());
    g << t.spec.instance, (t.spec.mu.array() + z.array() * t.spec.sigma_scale.array()).matrix();
    return evaluate(t.classifier, evaluate(t.spec.generator, g));
}

bool grid_finds_flip(const LatentToy &t)
{
    const int d = t.property.input.dim();
    std::vector<int> idx(d, 0);
    Vector z(d);
    for (;;) {
        for (int i = 0; i < d; ++i)
            z[i] = t.property.input.lo[i] + (t.property.input.hi[i] - t.property.input.lo[i]) * idx[i] / (kOraclePoints - 1);
        const Vector y = two_stage(t, z);
        for (int j : t.property.adversarial)
            if (y[j] >= y[t.property.label])
                return true;
        int i = 0;
        while (i < d && ++idx[i] == kOraclePoints)
            idx[i++] = 0;
        if (i == d)
            return false;
    }
}

Outcome oracle_equivalence()
{
    std::mt19937_64 rng(404);
    int robust = 0, not_robust = 0, timeout = 0, contradictions = 0, bad_witness = 0, grid_flips = 0;
    for (int i = 0; i < 100; ++i) {
        LatentToy t = latent_toy(rng, i);
        if (t.neurons > 8 || t.sshaped > 4)
            throw Error("toy exceeds the size limits");
        const Vector y0 = two_stage(t, Vector::Zero(t.spec.latent_dim()));
        Eigen::Index label = 0;
        y0.maxCoeff(&label);
        t.property = Property::robustness(InputBox::around(Vector::Zero(t.spec.latent_dim()), t.spec.delta),
                                          static_cast<int>(label), static_cast<int>(y0.size()));
        const Instance inst = make_instance("latent-toy", concatenate(t.spec, t.classifier), t.property);
        auto tuple = std::make_shared<const VerificationTuple>(encode(inst.network, inst.property));
        RefinementConfig cfg;
        cfg.timeout = 30;
        const CegarResult r = vnn_cegar(tuple, inst.property, cfg);
        g_budget.check(r.trace.rounds, cfg.m, 2);
        const bool flip = grid_finds_flip(t);
        grid_flips += flip;
        switch (r.verdict) {
        case Verdict::Robust:
            ++robust;
            contradictions += flip;
            break;
        case Verdict::NotRobust: {
            ++not_robust;
            const Vector y = two_stage(t, r.witness);
            bool flips = inst.property.input.contains(r.witness);
            bool any = false;
            for (int j : t.property.adversarial)
                any = any || y[j] >= y[t.property.label];
            bad_witness += !(flips && any && concrete_counterexample_check(*inst.network, inst.property, r.witness));
            break;
        }
        default:
            ++timeout;
            if (std::getenv("ACCEPTANCE_VERBOSE"))
                std::cerr << "toy " << i << ": " << r.trace.message << '\n';
        }
    }
    return {contradictions == 0 && bad_witness == 0,
            fmt("100 toys: robust %d, not_robust %d, timeout %d; grid flips %d; robust-vs-flip %d, bad witnesses %d",
                robust, not_robust, timeout, grid_flips, contradictions, bad_witness)};
}

// Criteria 5 and 6 -------------------------------------------------------------

std::vector<Instance> load_dir(const fs::path &dir)
{
    std::vector<fs::path> props;
    for (const auto &e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.ends_with(".property.json"))
            props.push_back(e.path());
    }
    std::sort(props.begin(), props.end());
    std::vector<Instance> out;
    for (const fs::path &p : props) {
        const std::string stem = p.filename().string().substr(0, p.filename().string().size() - 14);
        out.push_back(load_instance(dir / (stem + ".network.json"), p));
    }
    return out;
}

struct RadiusTable {
    std::vector<std::string> names;
    std::map<std::string, std::vector<double>> delta;  // per configuration
    std::map<std::string, int> timeouts;
};

const RadiusTable &radius_table(const fs::path &fixtures)
{
    static std::optional<RadiusTable> table;
    if (table)
        return *table;
    table.emplace();
    const std::vector<std::pair<std::string, std::pair<Mode, int>>> configs = {
        {"deeppoly", {Mode::DeepPoly, 0}}, {"nocegar", {Mode::NoCegar, 0}}, {"cegar", {Mode::Cegar, 0}},
        {"eager2", {Mode::Eager, 2}},      {"eager3", {Mode::Eager, 3}}};
    for (const Instance &inst : load_dir(fixtures / "suite")) {
        table->names.push_back(inst.name);
        for (const auto &[name, mk] : configs) {
            RunConfig cfg;
            cfg.mode = mk.first;
            if (mk.second)
                cfg.eager_k = mk.second;
            cfg.step = 0.02;
            cfg.timeout = 60;
            cfg.max_delta = 1.0;
            const VerdictReport r = radius_search(inst, cfg);
            table->delta[name].push_back(r.certified_delta.value_or(0.0));
            table->timeouts[name] += r.outcome == Verdict::Timeout;
        }
    }
    return *table;
}

Outcome configuration_ordering(const fs::path &fixtures)
{
    const RadiusTable &t = radius_table(fixtures);
    const std::size_t n = t.names.size();
    const auto &dp = t.delta.at("deeppoly");
    const auto &nc = t.delta.at("nocegar");
    const auto &cg = t.delta.at("cegar");
    // Certified radii are multiples of the step; compare in half steps.
    const double eps = 0.01;
    int ordered = 0, strict = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ordered += cg[i] >= nc[i] - eps && nc[i] >= dp[i] - eps;
        strict += cg[i] > dp[i] + eps;
    }
    auto mean = [&](const std::vector<double> &v) { return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    const bool ok = n == 20 && ordered >= 0.9 * n && strict >= 0.3 * n;
    return {ok, fmt("%zu nets: ordered %d, cegar>deeppoly %d; mean delta deeppoly %.3f nocegar %.3f cegar %.3f; "
                    "cegar timeouts %d",
                    n, ordered, strict, mean(dp), mean(nc), mean(cg), t.timeouts.at("cegar"))};
}

Outcome lazy_vs_eager(const fs::path &fixtures)
{
    const RadiusTable &t = radius_table(fixtures);
    auto mean = [&](const char *k) {
        const auto &v = t.delta.at(k);
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    const double c = mean("cegar"), e2 = mean("eager2"), e3 = mean("eager3");
    return {!t.names.empty() && c >= e2 && c >= e3,
            fmt("%zu nets: mean delta cegar %.4f, eager(2) %.4f, eager(3) %.4f", t.names.size(), c, e2, e3)};
}

// Criterion 7 -----------------------------------------------------------------

Outcome budget_law(const fs::path &fixtures)
{
    const std::vector<Instance> instances = load_dir(fixtures / "sweep");
    RunConfig cfg;
    cfg.timeout = 30;
    const std::vector<int> ms = {10, 50};
    std::map<int, std::map<std::string, int>> rounds;  // m → instance → refinement rounds, solved only
    auto observer = [&](const SweepRow &row, const Instance &inst, const VerdictReport &r) {
        g_budget.check(r.rounds, row.m, 2);
        if (r.outcome == Verdict::Robust || r.outcome == Verdict::NotRobust)
            rounds[row.m][inst.name] = r.refinement_rounds;
    };
    const auto rows = sweep_mk(instances, ms, {2.0}, cfg, observer);

    // Compare on the instances both settings solved so the means cover the same queries.
    double sum10 = 0, sum50 = 0;
    int common = 0;
    for (const auto &[name, r10] : rounds[10]) {
        const auto it = rounds[50].find(name);
        if (it == rounds[50].end())
            continue;
        ++common;
        sum10 += r10;
        sum50 += it->second;
    }
    const double m10 = common ? sum10 / common : 0.0;
    const double m50 = common ? sum50 / common : 0.0;
    const bool ok = g_budget.breaches == 0 && g_budget.rounds > 0 && common >= instances.size() / 2 && m50 <= m10 &&
                    rows.size() == 2;
    return {ok, fmt("%ld rounds checked, %ld over budget; sweep on %zu nets: solved m=10 %d, m=50 %d; "
                    "mean refinement rounds on %d common: m=10 %.2f, m=50 %.2f",
                    g_budget.rounds, g_budget.breaches, instances.size(), rows[0].solved, rows[1].solved, common,
                    m10, m50)};
}

// Criterion 8 -----------------------------------------------------------------

Outcome gadget_identity()
{
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> slope(1e-4, 2.0), pos(-10.0, 10.0);
    double worst = 0.0, worst_net = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const SShapedFamily f = random_family(rng);
        const double beta = slope(rng), gamma = slope(rng), p = pos(rng), x = pos(rng);
        const BoundDirection dir = rng() % 2 ? BoundDirection::Lower : BoundDirection::Upper;
        const double fp = f.value(p);
        const PiecewiseLinearBound h{0, p, fp, beta, gamma, dir, SlopeCase::Fallback};
        const double expected = fp + (x <= p ? beta : gamma) * (x - p);
        const LeakyReluGadget g = leaky_relu_encoding(h);
        worst = std::max(worst, std::abs(g.value(x) - expected));
        if (i % 10 == 0)
            worst_net = std::max(worst_net, std::abs(evaluate(g.as_network(), Vector::Constant(1, x))[0] - expected));
    }
    return {worst <= kGadgetTol && worst_net <= kGadgetTol,
            fmt("10000 draws: max |gadget - h| %.3e, as network %.3e", worst, worst_net)};
}

// Criterion 9 -----------------------------------------------------------------

Outcome lp_core()
{
    std::mt19937_64 rng(909);
    int feasible = 0, infeasible = 0, mismatches = 0, unknown = 0, loose = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const int n = 2 + i % 2;
        const LinearProgram lp = testing::random_small_lp(rng, n, 2 + i % 5);
        const bool exact = testing::rational_feasible(lp);
        const LpResult r = lp_solve(lp);
        if (r.status == LpStatus::Unknown || r.status == LpStatus::Unbounded) {
            ++unknown;
            continue;
        }
        const bool found = r.status == LpStatus::Optimal;
        mismatches += found != exact;
        if (found) {
            ++feasible;
            const double res = testing::rational_residual(lp, r.x);
            worst = std::max(worst, res);
            loose += res > kResidualTol;
        } else {
            ++infeasible;
        }
    }
    return {mismatches == 0 && unknown == 0 && loose == 0,
            fmt("200 LPs: feasible %d, infeasible %d, disagreements %d, unknown %d, max exact residual %.3e",
                feasible, infeasible, mismatches, unknown, worst)};
}

}  // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Acceptance checks"};
    std::string fixtures = SIGVERIFY_FIXTURES_DIR;
    std::vector<int> only;
    app.add_option("--fixtures", fixtures, "Fixture directory with suite/ and sweep/")->check(CLI::ExistingDirectory);
    app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        const char *name;
        double limit;  // seconds; 0 means none
        std::function<Outcome()> run;
    };
    const fs::path dir(fixtures);
    // Criterion 7 runs last so that it audits the traces of 3 and 4 as well.
    const std::vector<Criterion> criteria = {
        {1, "bound soundness", 30, bound_soundness},
        {2, "separation", 60, separation},
        {3, "CEGAR progress", 0, cegar_progress},
        {4, "oracle equivalence", 600, oracle_equivalence},
        {5, "configuration ordering", 1800, [&] { return configuration_ordering(dir); }},
        {6, "lazy vs eager", 0, [&] { return lazy_vs_eager(dir); }},
        {8, "LeakyReLU gadget identity", 0, gadget_identity},
        {9, "LP core", 0, lp_core},
        {7, "budget law", 0, [&] { return budget_law(dir); }},
    };

    bool all = true;
    std::set<int> selected(only.begin(), only.end());
    for (const Criterion &c : criteria) {
        if (!selected.empty() && !selected.count(c.id))
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = c.limit == 0 || t < c.limit;
        const bool pass = o.pass && in_time;
        all = all && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " (" << o.detail
                  << (in_time ? "" : "; over time limit") << ") [" << fmt("%.1f", t) << " s]" << std::endl;
    }
    return all ? 0 : 1;
}
