// dualcal command-line interface.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 check failure or
// internal error. Every failure prints one line "dualcal: <kind>: <reason>"
// to stderr before anything else.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dualcal/dualcal.hpp"

namespace fs = std::filesystem;
using namespace dualcal;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kCheck = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int fail(const char* kind, const std::string& reason, int code) {
    std::string line = reason;
    std::replace(line.begin(), line.end(), '\n', ' ');
    std::cerr << "dualcal: " << kind << ": " << line << '\n';
    return code;
}

void emit(const std::string& content, const std::string& path) {
    if (path.empty() || path == "-") std::cout << content;
    else io::write_text_file(path, content);
}

// --- loss flags ---------------------------------------------------------

struct LossFlags {
    std::string loss = "ce";
    std::optional<double> gamma;  // unset selects the per-loss default
    std::string variant = "largest";
    double smoothing = 0.05;

    void add_to(CLI::App& cmd, bool require_loss = false) {
        auto* opt = cmd.add_option("--loss", loss, "ce|focal|flsd53|dfl|dfl-variant|brier|ls");
        if (require_loss) opt->required();
        cmd.add_option("--gamma", gamma, "focusing parameter (default 3 for focal, 5 for dfl)");
        cmd.add_option("--variant", variant, "dual variant for dfl-variant: largest|kth:<k>|top:<m>|mean");
        cmd.add_option("--smoothing", smoothing, "label smoothing alpha");
    }

    LossSpec build() const { return build_named(loss, gamma); }

    LossSpec build_named(const std::string& name, std::optional<double> given) const {
        LossKind kind;
        try {
            kind = parse_loss_kind(name);
        } catch (const InvalidInput& e) {
            throw UsageError(e.what());
        }
        const bool dual = kind == LossKind::DualFocal || kind == LossKind::DualFocalVariant;
        const double g = given.value_or(kind == LossKind::Focal ? 3.0 : dual ? 5.0 : 0.0);
        if (!(g >= 0.0)) throw UsageError("gamma must be >= 0");
        LossSpec spec{kind, g, smoothing, {}};
        try {
            if (kind == LossKind::DualFocalVariant) spec.dual = parse_dual_variant(variant);
            spec.validate();
        } catch (const InvalidInput& e) {
            throw UsageError(e.what());
        }
        return spec;
    }
};

std::string describe(const LossSpec& spec) {
    std::string s(loss_name(spec.kind));
    if (spec.kind == LossKind::Focal || spec.kind == LossKind::DualFocal || spec.kind == LossKind::DualFocalVariant)
        s += ":" + io::format_fixed(spec.gamma, 2);
    return s;
}

SyntheticSpec dataset_from_flag(const std::string& text) {
    try {
        if (!text.empty() && fs::is_regular_file(text)) {
            std::ifstream in(text);
            std::stringstream buf;
            buf << in.rdbuf();
            std::string content = buf.str();
            std::replace(content.begin(), content.end(), '\n', ',');
            return SyntheticSpec::parse(content);
        }
        return SyntheticSpec::parse(text);
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
}

TrainConfig train_config(const LossSpec& loss, std::size_t epochs, std::uint64_t seed, std::size_t batch_size) {
    TrainConfig cfg;
    cfg.loss = loss;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.batch_size = batch_size;
    return cfg;
}

// --- train --------------------------------------------------------------

struct TrainArgs {
    LossFlags loss;
    std::size_t epochs = 60;
    std::uint64_t seed = 1;
    std::size_t batch_size = 128;
    std::string dataset = "";
    std::string out_dir;
};

int run_train(const TrainArgs& a) {
    const LossSpec spec = a.loss.build();
    const SyntheticSpec ds = dataset_from_flag(a.dataset);
    if (a.epochs == 0) throw UsageError("--epochs must be positive");
    const TrainConfig cfg = train_config(spec, a.epochs, a.seed, a.batch_size);
    const auto data = generate_dataset(ds);
    const auto trace = train(cfg, data, ds.num_classes);

    io::Json run;
    run["loss"] = std::string(loss_name(spec.kind));
    run["gamma"] = spec.gamma;
    if (spec.kind == LossKind::DualFocalVariant) run["variant"] = a.loss.variant;
    if (spec.kind == LossKind::LabelSmoothing) run["smoothing"] = spec.smoothing;
    run["epochs"] = cfg.epochs;
    run["batch_size"] = cfg.batch_size;
    run["momentum"] = cfg.momentum;
    run["weight_decay"] = cfg.weight_decay;
    run["seed"] = cfg.seed;
    run["dataset"] = ds.to_string();
    const std::string config_text = run.dump();
    run["config_hash"] = io::hex64(io::fnv1a(config_text));
    run["final"] = {{"test_ece", trace.epochs.back().test_ece}, {"test_error", trace.epochs.back().test_error}};

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    io::write_logits_file(dir / "test_logits.csv", trace.test);
    io::write_logits_file(dir / "val_logits.csv", trace.validation);
    io::write_text_file(dir / "trace.csv", io::trace_csv(trace));
    io::write_text_file(dir / "run.json", run.dump(2) + "\n");
    std::cout << "trained " << describe(spec) << " seed " << cfg.seed << ": test error "
              << io::format_fixed(trace.epochs.back().test_error, 4) << ", test ECE "
              << io::format_fixed(trace.epochs.back().test_ece, 4) << '\n';
    return kOk;
}

// --- eval ---------------------------------------------------------------

struct EvalArgs {
    std::string input;
    std::size_t bins = kDefaultBins;
    bool fit = false;
    std::string val;
    std::string out = "-";
};

int run_eval(const EvalArgs& a) {
    if (a.bins == 0) throw UsageError("--bins must be positive");
    if (a.fit && a.val.empty()) throw UsageError("--fit-temperature requires --val");
    const auto batch = io::read_logits_file(a.input);

    io::Json report;
    report["samples"] = batch.size();
    report["classes"] = batch.num_classes;
    report["bins"] = a.bins;
    report["pre"] = io::to_json(compute_metrics(batch, a.bins));
    report["reliability_pre"] = io::to_json(reliability_table(batch, a.bins));
    if (a.fit) {
        const auto val = io::read_logits_file(a.val);
        if (val.num_classes != batch.num_classes) throw DataError("--val has a different class count");
        const auto fit = fit_temperature(val, default_temperature_grid(), a.bins);
        const auto scaled = apply_temperature(batch, fit.temperature);
        auto post = compute_metrics(scaled, a.bins);
        post.temperature = fit.temperature;
        report["temperature"] = fit.temperature;
        report["post"] = io::to_json(post);
        report["reliability_post"] = io::to_json(reliability_table(scaled, a.bins));
        io::Json curve = io::Json::array();
        for (const auto& [t, e] : fit.curve) curve.push_back({t, e});
        report["temperature_curve"] = curve;
    }
    const std::string config = "eval;bins=" + std::to_string(a.bins) + ";fit=" + (a.fit ? "1" : "0");
    report["provenance"] = {{"config_hash", io::hex64(io::fnv1a(config))}, {"seed", nullptr}};
    emit(report.dump(2) + "\n", a.out);
    return kOk;
}

// --- theory -------------------------------------------------------------

struct TheoryArgs {
    double gamma = 1.0;
    double c = 0.3;
    std::string variant = "appendix";
    std::size_t samples = 100;
    std::string out_dir;
};

int run_theory(const TheoryArgs& a) {
    theory::PhiVariant diag;
    try {
        diag = theory::parse_variant(a.variant);
        if (diag == theory::PhiVariant::OffDiagonal) throw InvalidInput("--variant must be lemma or appendix");
        theory::PhiContext{a.gamma, a.c}.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    if (a.samples < 2) throw UsageError("--samples must be >= 2");
    const auto curve = theory::phi_curve(a.gamma, a.c, a.samples, diag);
    if (a.out_dir.empty()) {
        io::Json doc = io::regions_json(curve);
        doc["curve_csv"] = io::phi_curve_csv(curve);
        std::cout << doc.dump(2) << '\n';
    } else {
        fs::create_directories(a.out_dir);
        io::write_text_file(fs::path(a.out_dir) / "phi_curve.csv", io::phi_curve_csv(curve));
        io::write_text_file(fs::path(a.out_dir) / "regions.json", io::regions_json(curve).dump(2) + "\n");
    }
    return kOk;
}

// --- gradcheck ----------------------------------------------------------

struct GradcheckArgs {
    LossFlags loss;
    std::size_t trials = 200;
    std::vector<std::size_t> ks{2, 3, 10};
    std::uint64_t seed = 1;
};

int run_gradcheck_cmd(const GradcheckArgs& a) {
    const LossSpec spec = a.loss.build();
    bool ok = true;
    double worst = 0.0;
    for (std::size_t k : a.ks) {
        if (k < 2) throw UsageError("--k values must be >= 2");
        GradcheckOptions opts;
        opts.trials = a.trials;
        opts.seed = a.seed;
        const auto r = run_gradcheck(spec, k, opts);
        worst = std::max(worst, r.worst_relative_error);
        ok = ok && r.passed();
        std::cout << "gradcheck loss=" << describe(spec) << " k=" << k << " trials=" << r.trials
                  << " skipped=" << r.skipped << " failures=" << r.failures
                  << " worst_rel_err=" << io::format_real(r.worst_relative_error) << '\n';
    }
    std::cout << (ok ? "PASS" : "FAIL") << " worst_rel_err=" << io::format_real(worst) << '\n';
    if (!ok) throw CheckFailed("gradient mismatch, worst relative error " + io::format_real(worst));
    return kOk;
}

// --- compare ------------------------------------------------------------

struct CompareArgs {
    std::vector<std::string> losses{"ce", "dfl:5"};
    std::vector<std::uint64_t> seeds{1};
    std::string dataset = "";
    std::size_t epochs = 60;
    std::size_t batch_size = 128;
    std::size_t bins = kDefaultBins;
    std::string out = "-";
};

struct CellResult {
    MetricReport pre;
    MetricReport post;
    double temperature = 1.0;
};

CellResult run_cell(const LossSpec& spec, std::uint64_t seed, const DatasetSplits& data, std::size_t classes,
                    const CompareArgs& a) {
    const auto trace = train(train_config(spec, a.epochs, seed, a.batch_size), data, classes);
    const auto fit = fit_temperature(trace.validation, default_temperature_grid(), a.bins);
    return {compute_metrics(trace.test, a.bins), compute_metrics(apply_temperature(trace.test, fit.temperature), a.bins),
            fit.temperature};
}

int run_compare(const CompareArgs& a, const LossFlags& defaults) {
    if (a.losses.empty() || a.seeds.empty()) throw UsageError("--losses and --seeds must be nonempty");
    std::vector<LossSpec> specs;
    for (const auto& item : a.losses) {
        const auto colon = item.find(':');
        std::optional<double> g;
        if (colon != std::string::npos) {
            try {
                std::size_t used = 0;
                g = std::stod(item.substr(colon + 1), &used);
                if (used != item.size() - colon - 1) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw UsageError("bad loss entry '" + item + "'");
            }
        }
        specs.push_back(defaults.build_named(item.substr(0, colon), g));
    }
    const SyntheticSpec ds = dataset_from_flag(a.dataset);
    const auto data = generate_dataset(ds);

    std::vector<std::future<CellResult>> jobs;
    for (const auto& spec : specs)
        for (auto seed : a.seeds)
            jobs.push_back(std::async(std::launch::async, run_cell, spec, seed, std::cref(data), ds.num_classes,
                                      std::cref(a)));

    std::ostringstream table;
    table << "loss,error,ece_pre,ece_post,ada_ece_pre,ada_ece_post,classwise_ece_pre,classwise_ece_post,"
             "mce_pre,mce_post,nll_pre,nll_post,temperature\n";
    std::size_t job = 0;
    for (const auto& spec : specs) {
        std::vector<CellResult> cells;
        for (std::size_t s = 0; s < a.seeds.size(); ++s) cells.push_back(jobs[job++].get());
        auto median = [&](auto field) {
            std::vector<double> v;
            for (const auto& c : cells) v.push_back(field(c));
            return io::format_fixed(lower_median(v), 6);
        };
        table << describe(spec) << ',' << median([](const CellResult& c) { return c.pre.error_rate; }) << ','
              << median([](const CellResult& c) { return c.pre.ece; }) << ','
              << median([](const CellResult& c) { return c.post.ece; }) << ','
              << median([](const CellResult& c) { return c.pre.ada_ece; }) << ','
              << median([](const CellResult& c) { return c.post.ada_ece; }) << ','
              << median([](const CellResult& c) { return c.pre.classwise_ece; }) << ','
              << median([](const CellResult& c) { return c.post.classwise_ece; }) << ','
              << median([](const CellResult& c) { return c.pre.mce; }) << ','
              << median([](const CellResult& c) { return c.post.mce; }) << ','
              << median([](const CellResult& c) { return c.pre.nll; }) << ','
              << median([](const CellResult& c) { return c.post.nll; }) << ','
              << median([](const CellResult& c) { return c.temperature; }) << '\n';
    }
    emit(table.str(), a.out);
    return kOk;
}

// --- diagram ------------------------------------------------------------

struct DiagramArgs {
    std::string input;
    std::size_t bins = kDefaultBins;
    std::string svg;
    std::string out = "-";
};

int run_diagram(const DiagramArgs& a) {
    if (a.bins == 0) throw UsageError("--bins must be positive");
    const auto batch = io::read_logits_file(a.input);
    const auto rows = reliability_table(batch, a.bins);
    io::write_text_file(a.svg, io::reliability_svg(rows, a.bins));
    emit(io::reliability_csv(rows), a.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual focal loss calibration toolkit"};
    app.name("dualcal");
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train an MLP on a synthetic dataset and write logits");
    train_args.loss.add_to(*train_cmd);
    train_cmd->add_option("--epochs", train_args.epochs);
    train_cmd->add_option("--seed", train_args.seed);
    train_cmd->add_option("--batch-size", train_args.batch_size);
    train_cmd->add_option("--dataset-spec", train_args.dataset, "key=value list or file, e.g. kind=gaussian,k=3,overlap=1.25");
    train_cmd->add_option("--out-dir", train_args.out_dir)->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "calibration metrics of a logits file");
    eval_cmd->add_option("logits", eval_args.input)->required();
    eval_cmd->add_option("--bins", eval_args.bins);
    eval_cmd->add_flag("--fit-temperature", eval_args.fit);
    eval_cmd->add_option("--val", eval_args.val, "validation logits file for temperature fitting");
    eval_cmd->add_option("--out", eval_args.out, "report path ('-' for stdout)");

    TheoryArgs theory_args;
    auto* theory_cmd = app.add_subcommand("theory", "phi curves and over/under-confidence regions");
    theory_cmd->add_option("--gamma", theory_args.gamma);
    theory_cmd->add_option("--C", theory_args.c);
    theory_cmd->add_option("--variant", theory_args.variant, "diagonal convention: lemma|appendix");
    theory_cmd->add_option("--samples", theory_args.samples);
    theory_cmd->add_option("--out-dir", theory_args.out_dir);

    GradcheckArgs gc_args;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of a loss gradient");
    gc_args.loss.add_to(*gc_cmd);
    gc_cmd->add_option("--trials", gc_args.trials);
    gc_cmd->add_option("--k", gc_args.ks)->delimiter(',');
    gc_cmd->add_option("--seed", gc_args.seed);

    CompareArgs cmp_args;
    LossFlags cmp_defaults;
    auto* cmp_cmd = app.add_subcommand("compare", "train several losses and seeds and tabulate median metrics");
    cmp_cmd->add_option("--losses", cmp_args.losses, "e.g. ce,focal:3,dfl:5")->delimiter(',');
    cmp_cmd->add_option("--seeds", cmp_args.seeds)->delimiter(',');
    cmp_cmd->add_option("--dataset-spec", cmp_args.dataset);
    cmp_cmd->add_option("--epochs", cmp_args.epochs);
    cmp_cmd->add_option("--batch-size", cmp_args.batch_size);
    cmp_cmd->add_option("--bins", cmp_args.bins);
    cmp_cmd->add_option("--variant", cmp_defaults.variant);
    cmp_cmd->add_option("--smoothing", cmp_defaults.smoothing);
    cmp_cmd->add_option("--out", cmp_args.out);

    DiagramArgs diag_args;
    auto* diag_cmd = app.add_subcommand("diagram", "reliability table and SVG for a logits file");
    diag_cmd->add_option("logits", diag_args.input)->required();
    diag_cmd->add_option("--bins", diag_args.bins);
    diag_cmd->add_option("--svg", diag_args.svg)->required();
    diag_cmd->add_option("--out", diag_args.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("usage-error", e.what(), kUsage);
        std::cerr << app.help();
        return kUsage;
    }

    try {
        if (*train_cmd) return run_train(train_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*theory_cmd) return run_theory(theory_args);
        if (*gc_cmd) return run_gradcheck_cmd(gc_args);
        if (*cmp_cmd) return run_compare(cmp_args, cmp_defaults);
        if (*diag_cmd) return run_diagram(diag_args);
    } catch (const UsageError& e) {
        fail("usage-error", e.what(), kUsage);
        std::cerr << app.help();
        return kUsage;
    } catch (const InvalidInput& e) {
        return fail("usage-error", e.what(), kUsage);
    } catch (const DataError& e) {
        return fail("data-error", e.what(), kData);
    } catch (const CheckFailed& e) {
        return fail("check-failed", e.what(), kCheck);
    } catch (const std::exception& e) {
        return fail("internal-error", e.what(), kCheck);
    }
    return kUsage;
}
