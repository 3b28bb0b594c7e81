#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "tminimax/allocation.hpp"
#include "tminimax/estimators.hpp"
#include "tminimax/io.hpp"
#include "tminimax/risk.hpp"
#include "tminimax/rng.hpp"
#include "tminimax/simulate.hpp"
#include "tminimax/version.hpp"

namespace tminimax::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream ss;
    for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return ss.str();
}

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Records what a run read and wrote. Outputs are hashed when written.
class Manifest {
public:
    Manifest(const std::vector<std::string>& args, std::uint64_t seed)
        : doc_{{"command", args}, {"seed", seed}, {"version", version}, {"started_at", utc_now()},
               {"inputs", json::object()}, {"outputs", json::array()}, {"params", json::object()}} {}

    std::string read_input(const fs::path& path) {
        std::string bytes = read_file(path);
        doc_["inputs"][path.string()] = sha256_hex(bytes);
        return bytes;
    }

    void write_output(const fs::path& path, const std::string& bytes) {
        write_file_atomic(path, bytes);
        doc_["outputs"].push_back({{"path", path.string()}, {"sha256", sha256_hex(bytes)}});
    }

    json& params() { return doc_["params"]; }

    void finish(const fs::path& path) {
        doc_["finished_at"] = utc_now();
        write_file_atomic(path, doc_.dump(2) + "\n");
    }

private:
    json doc_;
};

// Result text goes to --out when given, stdout otherwise.
void emit(const std::string& text, const std::string& out_path, Manifest& manifest, std::ostream& out) {
    if (out_path.empty()) out << text;
    else manifest.write_output(out_path, text);
}

ObjectiveMode parse_mode(const std::string& mode, double rho, int k) {
    if (mode == "basic") return ObjectiveMode::basic();
    if (mode == "augmented") return ObjectiveMode::augmented();
    if (mode == "weighted") return ObjectiveMode::weighted(rho);
    if (mode == "recycling") return ObjectiveMode::recycling(k);
    throw CLI::ValidationError("--mode", "unknown mode '" + mode + "'");
}

InstantaneousEstimator parse_estimator(const std::string& name) {
    if (name == "plugin") return InstantaneousEstimator::PlugIn;
    if (name == "augmented") return InstantaneousEstimator::Augmented;
    if (name == "recycling") return InstantaneousEstimator::Recycling;
    throw CLI::ValidationError("--estimator", "unknown estimator '" + name + "'");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

template <typename Int>
std::vector<Int> parse_int_list(const std::string& s, const std::string& flag) {
    std::vector<Int> out;
    for (const std::string& item : split_list(s)) {
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || pos == 0) throw CLI::ValidationError(flag, "not an integer list: '" + s + "'");
        out.push_back(static_cast<Int>(v));
    }
    if (out.empty()) throw CLI::ValidationError(flag, "empty list");
    return out;
}

struct Common {
    std::uint64_t seed = 0;
    std::string format = "json";
    std::string out;
    std::string manifest;
};

void add_common(CLI::App* app, Common& c, const std::string& default_format) {
    c.format = default_format;
    app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app->add_option("--out", c.out, "Output file (default: stdout)");
    app->add_option("--manifest", c.manifest, "Write a JSON run manifest to this path");
}

void finish(Manifest& manifest, const Common& c) {
    if (!c.manifest.empty()) manifest.finish(c.manifest);
}

// design -------------------------------------------------------------------

struct DesignArgs {
    std::int64_t n = 0;
    int t = 0;
    std::string mode = "basic";
    double rho = 0.5;
    int k = 1;
    bool relaxed = false;
};

void run_design(const DesignArgs& a, const Common& c, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest(args, c.seed);
    const ObjectiveMode mode = parse_mode(a.mode, a.rho, a.k);
    RealAllocation alloc = a.relaxed ? relaxed(static_cast<double>(a.n), a.t, mode) : to_real(integer_solve(a.n, a.t, mode));
    const double obj = objective(alloc, mode);
    manifest.params() = {{"n", a.n}, {"t", a.t}, {"mode", mode.name()}, {"relaxed", a.relaxed}};
    std::string text;
    if (c.format == "json") {
        json arms = json::array();
        for (int i = 0; i <= a.t; ++i) {
            json count = a.relaxed ? json(alloc[static_cast<std::size_t>(i)])
                                   : json(static_cast<std::int64_t>(alloc[static_cast<std::size_t>(i)]));
            arms.push_back({{"arm", ArmId::from_index(i).key()}, {"count", count}});
        }
        json doc = {{"N", a.n}, {"T", a.t}, {"mode", mode.name()}, {"relaxed", a.relaxed}, {"arms", arms}, {"objective", obj}};
        text = doc.dump(2) + "\n";
    } else {
        Table table{{"arm", "count", "objective"}, {}};
        for (int i = 0; i <= a.t; ++i) {
            const double v = alloc[static_cast<std::size_t>(i)];
            table.add({ArmId::from_index(i).key(), a.relaxed ? Cell(v) : Cell(static_cast<std::int64_t>(v)), obj});
        }
        text = format_table(table, TableFormat::Csv);
    }
    emit(text, c.out, manifest, out);
    finish(manifest, c);
}

// estimate -----------------------------------------------------------------

struct EstimateArgs {
    std::string assignment;
    std::string outcomes;
    std::string estimator = "plugin";
    int k = 1;
    std::string family;
};

void run_estimate(const EstimateArgs& a, const Common& c, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest(args, c.seed);
    std::optional<ArmFamily> family;
    if (a.family == "pulse") family = ArmFamily::Pulse;
    if (a.family == "wedge") family = ArmFamily::Wedge;
    const AssignmentMatrix Z = parse_assignment_csv(manifest.read_input(a.assignment), family);
    const ObservedOutcomes obs{parse_matrix_csv(manifest.read_input(a.outcomes))};
    if (obs.values.rows() != Z.N() || obs.values.cols() != static_cast<std::size_t>(Z.T()))
        throw DomainError("outcomes must have the same shape as the assignment");
    const InstantaneousEstimator est = parse_estimator(a.estimator);
    const EffectEstimates e = estimate_all(Z, obs, est, a.k, true, true);
    manifest.params() = {{"estimator", a.estimator}, {"k", a.k},
                         {"family", Z.family() == ArmFamily::Wedge ? "wedge" : "pulse"}};
    Table table{{"t", "lambda_hat", "instantaneous_hat", "estimator"}, {}};
    for (int t = 2; t <= Z.T(); ++t) {
        const auto j = static_cast<std::size_t>(t - 2);
        table.add({std::int64_t{t}, e.lambda[j], e.instantaneous[j], a.estimator});
    }
    emit(format_table(table, parse_format(c.format)), c.out, manifest, out);
    finish(manifest, c);
}

// risk ---------------------------------------------------------------------

struct RiskArgs {
    std::int64_t n = 0;
    int t = 0;
    std::string designs = "balanced,minimax,augmented";
    std::string spec = "plugin";
    double rho = 0.5;
    int k = 1;
    double vstar = 1.0;
    std::int64_t draws = 1000;
    std::string schedule;
    bool unnormalized_loss = false;
};

Allocation design_for(const std::string& name, std::int64_t N, int T, const LossSpec& spec) {
    if (name == "balanced") return balanced(N, T);
    if (name == "minimax") return integer_solve(N, T, ObjectiveMode::basic());
    if (name == "augmented") return integer_solve(N, T, ObjectiveMode::augmented());
    if (name == "weighted") return integer_solve(N, T, ObjectiveMode::weighted(spec.rho));
    if (name == "recycling") return integer_solve(N, T, ObjectiveMode::recycling(spec.k));
    throw CLI::ValidationError("--designs", "unknown design '" + name + "'");
}

void run_risk(const RiskArgs& a, const Common& c, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest(args, c.seed);
    LossSpec spec{parse_estimator(a.spec), a.rho, a.k, a.unnormalized_loss};
    spec.validate();
    if (!(a.vstar > 0.0)) throw DomainError("--vstar must be positive");
    if (a.draws < 0) throw DomainError("--draws must be non-negative");
    const std::vector<std::string> names = split_list(a.designs);
    if (names.empty()) throw CLI::ValidationError("--designs", "no designs given");
    std::vector<Allocation> allocs;
    for (const auto& name : names) allocs.push_back(design_for(name, a.n, a.t, spec));

    std::optional<PotentialOutcomeSchedule> sched;
    std::string schedule_source = "none";
    if (!a.schedule.empty()) {
        sched = parse_schedule_json(manifest.read_input(a.schedule));
        if (sched->N() != static_cast<std::size_t>(a.n) || sched->T() != a.t)
            throw DomainError("schedule shape does not match --n/--t");
        schedule_source = a.schedule;
    } else if (a.draws > 0) {
        // Worst case over the box [0, u] with u chosen so that V* = vstar.
        const double N = static_cast<double>(a.n);
        const double hi = std::ceil(N / 2.0), lo = std::floor(N / 2.0);
        const double u = std::sqrt(a.vstar * N * (N - 1.0) / (hi * lo));
        sched = worst_case_schedule(static_cast<std::size_t>(a.n), a.t, 0.0, u).schedule;
        schedule_source = "worst_case";
    }
    manifest.params() = {{"n", a.n},         {"t", a.t},         {"designs", names},
                         {"spec", spec.name()}, {"rho", a.rho},     {"k", a.k},
                         {"vstar", a.vstar}, {"draws", a.draws}, {"unnormalized_loss", a.unnormalized_loss},
                         {"schedule", schedule_source}};

    Table table{{"design", "spec", "N", "T", "vstar", "max_risk", "mc_risk", "mc_se", "draws"}, {}};
    for (std::size_t d = 0; d < names.size(); ++d) {
        const double mr = max_risk(allocs[d], a.vstar, spec);
        if (sched && a.draws > 0) {
            const RiskReport r = mc_risk(allocs[d], *sched, spec, a.draws, derive_seed(c.seed, d));
            table.add({names[d], spec.name(), a.n, std::int64_t{a.t}, a.vstar, mr, r.mc_risk, r.mc_se, r.draws});
        } else {
            table.add({names[d], spec.name(), a.n, std::int64_t{a.t}, a.vstar, mr, std::string(), std::string(),
                       std::int64_t{0}});
        }
    }
    emit(format_table(table, parse_format(c.format)), c.out, manifest, out);
    finish(manifest, c);
}

// simulate -----------------------------------------------------------------

struct SimulateArgs {
    int figure = 0;
    std::string n = "1000";
    std::string t_list = "10,20,30,40,50";
    std::string model = "both";
    std::string loss = "plugin";
    int reps = 100;
    std::string out_dir;
    bool relaxed = false;
    bool sampled = false;
};

void run_simulate(const SimulateArgs& a, const Common& c, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest(args, c.seed);
    const auto Ns = parse_int_list<std::int64_t>(a.n, "--n");
    const auto Ts = parse_int_list<int>(a.t_list, "--t-list");
    const TableFormat format = parse_format(c.format);
    const std::string ext = format == TableFormat::Csv ? ".csv" : ".json";
    fs::create_directories(a.out_dir);
    json& params = manifest.params();
    params = {{"figure", a.figure}, {"n", Ns}, {"t_list", Ts}};

    if (a.figure == 1 || a.figure == 2) {
        if (Ns.size() != 1) throw CLI::ValidationError("--n", "figures 1 and 2 take a single N");
        if (a.figure == 1) {
            manifest.write_output(fs::path(a.out_dir) / ("figure1_allocations" + ext),
                                  format_table(allocation_table(Ns[0], Ts), format));
        } else {
            params["relaxed"] = a.relaxed;
            manifest.write_output(fs::path(a.out_dir) / ("figure2_maxrisk" + ext),
                                  format_table(maxrisk_table(Ns[0], Ts, a.relaxed), format));
        }
    } else {
        std::vector<OutcomeModel> models;
        if (a.model == "both") models = {OutcomeModel::Standard, OutcomeModel::Habituation};
        else models = {parse_model(a.model)};
        if (a.loss != "plugin" && a.loss != "augmented")
            throw CLI::ValidationError("--loss", "must be plugin or augmented");
        ComparisonOptions opts;
        opts.sampled = a.sampled;
        const ModelParams& p = opts.params;
        params["model"] = a.model;
        params["reps"] = a.reps;
        params["sampled"] = a.sampled;
        params["primary_loss"] = a.loss;
        params["model_params"] = {{"mu", p.mu},         {"alpha", "log(i)"},        {"beta", "log(t)"},
                                  {"delta", p.delta},   {"gamma", p.gamma},         {"rho_decay", p.rho_decay},
                                  {"noise_sd", p.noise_sd}, {"shared_noise", p.shared_noise}};
        // Both loss variants are always produced; --loss marks the primary one.
        for (const bool augmented : {false, true}) {
            opts.augmented_loss = augmented;
            Table merged;
            for (std::size_t m = 0; m < models.size(); ++m) {
                Table t = expected_risk_comparison(Ns, Ts, models[m], a.reps, derive_seed(c.seed, m), opts);
                if (m == 0) merged.columns = t.columns;
                for (auto& row : t.rows) merged.rows.push_back(std::move(row));
            }
            const std::string name = augmented ? "figure3_risk_augmented" : "figure3_risk_plugin";
            manifest.write_output(fs::path(a.out_dir) / (name + ext), format_table(merged, format));
        }
    }
    manifest.finish(c.manifest.empty() ? fs::path(a.out_dir) / "manifest.json" : fs::path(c.manifest));
    out << "wrote " << a.out_dir << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Minimax designs for temporal experiments with habituation", "tminimax"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);

    Common common;
    DesignArgs design;
    CLI::App* d = app.add_subcommand("design", "Compute a minimax allocation");
    d->add_option("--n", design.n, "Number of units")->required()->check(CLI::PositiveNumber);
    d->add_option("--t", design.t, "Number of periods")->required()->check(CLI::Range(2, 100000));
    d->add_option("--mode", design.mode, "Objective")
        ->check(CLI::IsMember({"basic", "augmented", "weighted", "recycling"}))->capture_default_str();
    d->add_option("--rho", design.rho, "Loss weight for weighted mode")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    d->add_option("--k", design.k, "Carryover order for recycling mode")->check(CLI::PositiveNumber)->capture_default_str();
    d->add_flag("--relaxed", design.relaxed, "Report the continuous relaxation");

    EstimateArgs estimate;
    CLI::App* e = app.add_subcommand("estimate", "Estimate habituation and instantaneous effects");
    e->add_option("--assignment", estimate.assignment, "Assignment CSV")->required();
    e->add_option("--outcomes", estimate.outcomes, "Observed outcomes CSV")->required();
    e->add_option("--estimator", estimate.estimator, "Instantaneous estimator")
        ->check(CLI::IsMember({"plugin", "augmented", "recycling"}))->capture_default_str();
    e->add_option("--k", estimate.k, "Carryover order for recycling")->check(CLI::PositiveNumber)->capture_default_str();
    e->add_option("--family", estimate.family, "Force the assignment family")->check(CLI::IsMember({"pulse", "wedge"}));

    RiskArgs risk;
    CLI::App* r = app.add_subcommand("risk", "Maximum and Monte-Carlo risk of designs");
    r->add_option("--n", risk.n, "Number of units")->required()->check(CLI::PositiveNumber);
    r->add_option("--t", risk.t, "Number of periods")->required()->check(CLI::Range(2, 100000));
    r->add_option("--designs", risk.designs, "Comma list of balanced,minimax,augmented,weighted,recycling")->capture_default_str();
    r->add_option("--spec", risk.spec, "Loss estimator")
        ->check(CLI::IsMember({"plugin", "augmented", "recycling"}))->capture_default_str();
    r->add_option("--rho", risk.rho, "Loss weight")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    r->add_option("--k", risk.k, "Carryover order")->check(CLI::PositiveNumber)->capture_default_str();
    r->add_option("--vstar", risk.vstar, "Worst-case variance scale")->capture_default_str();
    r->add_option("--draws", risk.draws, "Monte-Carlo draws (0 skips)")->capture_default_str();
    r->add_option("--schedule", risk.schedule, "Schedule JSON (default: worst case)");
    r->add_flag("--unnormalized-loss", risk.unnormalized_loss, "Report the unnormalized loss scale");

    SimulateArgs sim;
    CLI::App* s = app.add_subcommand("simulate", "Reproduce the figure tables");
    s->add_option("--figure", sim.figure, "Figure")->required()->check(CLI::IsMember({1, 2, 3}));
    s->add_option("--n", sim.n, "Units (comma list for figure 3)")->capture_default_str();
    s->add_option("--t-list", sim.t_list, "Comma list of T")->capture_default_str();
    s->add_option("--model", sim.model, "Outcome model")
        ->check(CLI::IsMember({"standard", "habituation", "both"}))->capture_default_str();
    s->add_option("--loss", sim.loss, "Primary loss variant for figure 3")
        ->check(CLI::IsMember({"plugin", "augmented"}))->capture_default_str();
    s->add_option("--reps", sim.reps, "Replications for figure 3")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--out", sim.out_dir, "Output directory")->required();
    s->add_flag("--relaxed", sim.relaxed, "Figure 2 with relaxed designs");
    s->add_flag("--sampled", sim.sampled, "Figure 3 with one sampled assignment per replicate");

    for (CLI::App* sub : {d, e, r}) add_common(sub, common, "json");
    s->add_option("--seed", common.seed, "Random seed")->capture_default_str();
    s->add_option("--format", common.format, "Table format")->check(CLI::IsMember({"json", "csv"}));
    s->add_option("--manifest", common.manifest, "Manifest path (default: <out>/manifest.json)");
    common.format = "json";

    if (args.empty()) {
        err << app.help();
        return 2;
    }
    std::vector<std::string> full{"tminimax"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex, out, err);
        return 2;
    }
    // simulate writes CSV unless --format says otherwise
    if (s->parsed() && s->count("--format") == 0) common.format = "csv";

    try {
        if (d->parsed()) run_design(design, common, full, out);
        else if (e->parsed()) run_estimate(estimate, common, full, out);
        else if (r->parsed()) run_risk(risk, common, full, out);
        else run_simulate(sim, common, full, out);
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace tminimax::cli
