#include "hocroute/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hocroute/evaluation.hpp"
#include "hocroute/io.hpp"
#include "hocroute/numeric.hpp"
#include "hocroute/selftest.hpp"
#include "hocroute/synthetic.hpp"

namespace hocroute {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Everything needed to rerun a command: argv, seeds, input hashes, config, outputs.
class Manifest {
public:
    Manifest(std::string command, const std::vector<std::string>& args) {
        doc_["format"] = io::kManifestFormat;
        doc_["version"] = io::kFormatVersion;
        doc_["command"] = std::move(command);
        doc_["argv"] = args;
        doc_["seeds"] = json::object();
        doc_["inputs"] = json::array();
        doc_["config"] = json::object();
        doc_["outputs"] = json::array();
        doc_["calibration_performed"] = false;
    }

    void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
    void input(const fs::path& path) {
        doc_["inputs"].push_back({{"path", path.string()}, {"sha256", io::sha256_file(path)}});
    }
    void config(const std::string& key, json value) { doc_["config"][key] = std::move(value); }
    void output(const fs::path& path) { doc_["outputs"].push_back(path.string()); }
    void calibration_performed(bool v) { doc_["calibration_performed"] = v; }

    void write(const fs::path& path) const { io::write_file(path, doc_.dump(2) + "\n"); }

private:
    json doc_;
};

fs::path manifest_path_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

json cost_json(double c) {
    if (std::isinf(c)) return c > 0 ? json("inf") : json("-inf");
    return json(c);
}

TruthSource resolve_truth(const std::string& text, std::span<const SnapshotExample> test) {
    if (text == "pstar") return TruthSource::ExactPStar;
    if (text == "snapshot") return TruthSource::SnapshotMean;
    if (text != "auto") throw InvalidInput("--truth must be auto, pstar or snapshot");
    const bool all_exact = std::all_of(test.begin(), test.end(), [](const SnapshotExample& e) { return e.p_star.has_value(); });
    return all_exact ? TruthSource::ExactPStar : TruthSource::SnapshotMean;
}

PredictionMode parse_mode(const std::string& text) {
    if (text == "deployed") return PredictionMode::Deployed;
    if (text == "raw") return PredictionMode::Raw;
    throw InvalidInput("--mode must be deployed or raw");
}

std::vector<double> parse_alphas(const std::vector<std::string>& texts) {
    std::vector<double> alphas;
    for (const auto& t : texts) {
        const auto grid = parse_beta_grid(t);
        if (grid.size() != 1) throw InvalidInput("--alpha takes single values, got '" + t + "'");
        alphas.push_back(grid[0]);
    }
    if (alphas.empty()) throw InvalidInput("at least one --alpha is required");
    return alphas;
}

std::vector<OracleSpec> parse_oracles(const std::vector<std::string>& texts, std::size_t count) {
    if (texts.empty()) return bayes_oracles(count);
    std::vector<OracleSpec> oracles;
    for (const auto& t : texts) oracles.push_back(OracleSpec::parse(t));
    if (oracles.size() != count) {
        throw InvalidInput("got " + std::to_string(oracles.size()) + " oracles for " + std::to_string(count) +
                           " routing penalties");
    }
    return oracles;
}

std::vector<LossSpec> parse_losses(const std::vector<std::string>& texts) {
    std::vector<LossSpec> losses;
    for (const auto& t : texts) {
        if (t == "all") {
            for (const auto& l : all_default_losses()) losses.push_back(l);
        } else {
            losses.push_back(parse_loss(t));
        }
    }
    if (losses.empty()) throw InvalidInput("at least one --loss is required");
    return losses;
}

json oracle_json(const std::vector<OracleSpec>& oracles) {
    json j = json::array();
    for (const auto& o : oracles) j.push_back(o.str());
    return j;
}

json loss_json(const LossSpec& loss) { return json::parse(io::loss_to_json(loss)); }

std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty() || path == "-") return fallback;
    file.open(path, std::ios::binary);
    if (!file) throw InvalidInput("cannot write " + path);
    return file;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string function = "sinusoidal";
    std::uint64_t seed = 1;
    std::size_t train_size = 10000;
    std::size_t cal_size = 5000;
    std::size_t test_size = 100000;
    std::size_t k = 100;
    std::size_t test_k = 100;
    std::size_t weak_bins = 50;
    std::string out_dir = ".";
};

int run_generate(const GenerateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    synthetic::SyntheticOptions opt;
    opt.kind = synthetic::parse_ground_truth_kind(a.function);
    opt.seed = a.seed;
    opt.train_size = a.train_size;
    opt.calibration_size = a.cal_size;
    opt.test_size = a.test_size;
    opt.k = a.k;
    opt.test_k = a.test_k;
    opt.weak_bins = a.weak_bins;
    const auto data = synthetic::generate(opt);

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    const fs::path cal = dir / "calibration.jsonl";
    const fs::path test = dir / "test.jsonl";
    const io::DatasetHeader header{2, {"negative", "positive"}};
    io::write_dataset(cal, data.calibration, header);
    io::write_dataset(test, data.test, header);

    Manifest m("generate-synthetic", argv);
    m.seed("synthetic", a.seed);
    m.config("function", a.function);
    m.config("train_size", a.train_size);
    m.config("calibration_size", a.cal_size);
    m.config("test_size", a.test_size);
    m.config("k", a.k);
    m.config("test_k", a.test_k);
    m.config("weak_bins", a.weak_bins);
    for (const auto& p : {cal, io::header_path(cal), test, io::header_path(test)}) m.output(p);
    m.write(dir / "generate.manifest.json");
    out << json{{"calibration", cal.string()}, {"test", test.string()}}.dump() << '\n';
    return 0;
}

struct CalibrateArgs {
    std::string in;
    std::string partition = "topclass:10";
    bool recalibrate = false;
    std::string out;
    std::string manifest;
};

int run_calibrate(const CalibrateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    const auto request = parse_partition_request(a.partition);
    const auto data = io::ingest(a.in);
    const auto partition = PartitionSpec::fit(request, data);
    const auto model = calibrate(partition, data, a.recalibrate);
    io::save_model(a.out, model);

    Manifest m("calibrate", argv);
    m.input(a.in);
    m.config("partition", a.partition);
    m.config("recalibrate", a.recalibrate);
    m.calibration_performed(true);
    m.output(a.out);
    m.write(a.manifest.empty() ? manifest_path_for(a.out) : fs::path(a.manifest));
    out << json{{"model", a.out}, {"bins", model.mixtures().size()}, {"examples", data.size()}}.dump() << '\n';
    return 0;
}

struct RouteArgs {
    std::string model;
    std::string loss;
    std::vector<std::string> alphas;
    std::string beta = "inf";
    std::vector<std::string> oracles;
    std::string in = "-";
    std::string out = "-";
    std::string manifest;
    std::size_t threads = 1;
};

std::string decision_line(const SnapshotExample& ex, const BinId& bin, const RoutingDecision& d) {
    json costs = json::object();
    for (const auto& c : d.costs) costs[to_string(c.action)] = cost_json(c.cost);
    return json{{"id", ex.id}, {"bin", bin.str()}, {"action", to_string(d.action)}, {"est_costs", costs}}.dump();
}

int run_route(const RouteArgs& a, const std::vector<std::string>& argv, std::istream& in, std::ostream& out) {
    if (a.threads == 0) throw InvalidInput("--threads must be at least 1");
    const auto model = io::load_model(a.model);
    const auto loss = parse_loss(a.loss);
    const auto alphas = parse_alphas(a.alphas);
    const auto betas = parse_beta_grid(a.beta);
    if (betas.size() != 1) throw InvalidInput("--beta takes a single value for route");
    const auto oracles = parse_oracles(a.oracles, alphas.size());
    const RoutingConfig config(loss, alphas, betas[0]);
    if (!loss.supports(model.num_classes())) {
        throw UnsupportedLoss(loss.name() + " does not support " + std::to_string(model.num_classes()) + " classes");
    }
    const Router router(model, config, oracles);

    std::ifstream in_file;
    std::istream& source = (a.in == "-") ? in : (in_file.open(a.in), in_file);
    if (!source) throw InvalidInput("cannot open " + a.in);
    std::ofstream out_file;
    std::ostream& sink = open_output(a.out, out_file, out);

    constexpr std::size_t kChunk = 4096;
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::vector<std::string> rendered;
    std::size_t line_number = 0;
    std::size_t routed = 0;
    bool done = false;
    while (!done) {
        lines.clear();
        std::string line;
        while (lines.size() < kChunk) {
            if (!std::getline(source, line)) {
                done = true;
                break;
            }
            ++line_number;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            lines.emplace_back(line_number, std::move(line));
        }
        rendered.assign(lines.size(), {});
        std::vector<std::exception_ptr> errors(lines.size());
        auto work = [&](std::size_t worker) {
            for (std::size_t i = worker; i < lines.size(); i += a.threads) {
                try {
                    const auto ex = io::parse_record(lines[i].second, lines[i].first, model.num_classes(), false);
                    const BinId bin = model.assign(ex);
                    rendered[i] = decision_line(ex, bin, router.decision(bin));
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < std::min(a.threads, lines.size()); ++w) pool.emplace_back(work, w);
        work(0);
        for (auto& t : pool) t.join();
        // Lines before the first bad record are still emitted, in input order.
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (errors[i]) {
                sink.flush();
                std::rethrow_exception(errors[i]);
            }
            sink << rendered[i] << '\n';
        }
        routed += rendered.size();
    }
    sink.flush();

    if (!a.manifest.empty() || a.out != "-") {
        Manifest m("route", argv);
        m.input(a.model);
        if (a.in != "-") m.input(a.in);
        m.config("loss", loss_json(loss));
        m.config("alphas", alphas);
        m.config("beta", cost_json(betas[0]));
        m.config("oracles", oracle_json(oracles));
        m.config("threads", a.threads);
        m.config("records", routed);
        if (a.out != "-") m.output(a.out);
        m.write(a.manifest.empty() ? manifest_path_for(a.out) : fs::path(a.manifest));
    }
    return 0;
}

struct CurveArgs {
    std::string model;
    std::string test;
    std::vector<std::string> losses{"brier"};
    std::string truth = "auto";
    std::string mode = "deployed";
    std::vector<std::string> scores;
    std::string out;
    std::string manifest;
};

int run_curve(const CurveArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    const auto model = io::load_model(a.model);
    const auto test = io::ingest(a.test);
    const auto losses = parse_losses(a.losses);
    std::vector<std::pair<std::string, std::map<std::string, double>>> raw_scores;
    for (const auto& s : a.scores) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidInput("--scores expects name=path, got '" + s + "'");
        raw_scores.emplace_back(s.substr(0, eq), io::read_scores_csv(s.substr(eq + 1)));
    }
    if (test.empty()) throw InvalidInput("test set is empty");

    const TruthSource truth = resolve_truth(a.truth, test);
    const auto inputs = prepare_evaluation(model, test, truth, parse_mode(a.mode));
    std::vector<RankedPolicy> external;
    for (const auto& [name, by_id] : raw_scores) external.push_back(external_scores(test, by_id, name));

    const auto reports = multi_loss_report(model, test, inputs, losses, external);
    std::vector<RoutingCurve> curves;
    for (const auto& r : reports) {
        if (r.skipped) {
            err << json{{"warning", "unsupported_loss"}, {"message", r.warning}}.dump() << '\n';
            continue;
        }
        curves.insert(curves.end(), r.curves.begin(), r.curves.end());
    }
    std::ofstream file;
    std::ostream& sink = open_output(a.out, file, out);
    write_curves_csv(sink, curves);
    sink.flush();

    if (!a.manifest.empty() || !a.out.empty()) {
        Manifest m("curve", argv);
        m.input(a.model);
        m.input(a.test);
        for (const auto& s : a.scores) m.input(s.substr(s.find('=') + 1));
        json lj = json::array();
        for (const auto& l : losses) lj.push_back(loss_json(l));
        m.config("losses", lj);
        m.config("truth", truth == TruthSource::ExactPStar ? "pstar" : "snapshot");
        m.config("mode", a.mode);
        if (!a.out.empty()) m.output(a.out);
        m.write(a.manifest.empty() ? manifest_path_for(a.out) : fs::path(a.manifest));
    }
    return 0;
}

struct SweepArgs {
    std::string model;
    std::string test;
    std::string loss = "brier";
    std::string alpha = "0.05";
    std::string beta = "0.1:0.8:0.05";
    std::vector<std::string> oracles;
    std::string truth = "auto";
    std::string mode = "deployed";
    std::string out;
    std::string manifest;
};

int run_sweep(const SweepArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    const auto model = io::load_model(a.model);
    const auto test = io::ingest(a.test);
    const auto loss = parse_loss(a.loss);
    const auto alphas = parse_alphas({a.alpha});
    const auto betas = parse_beta_grid(a.beta);
    const auto oracles = parse_oracles(a.oracles, 1);
    if (test.empty()) throw InvalidInput("test set is empty");
    if (!loss.supports(model.num_classes())) {
        throw UnsupportedLoss(loss.name() + " does not support " + std::to_string(model.num_classes()) + " classes");
    }

    const TruthSource truth = resolve_truth(a.truth, test);
    const auto inputs = prepare_evaluation(model, test, truth, parse_mode(a.mode));
    const auto sweep = cost_sweep(model, test, inputs, loss, alphas[0], betas, oracles);

    std::ofstream file;
    std::ostream& sink = open_output(a.out, file, out);
    write_sweep_csv(sink, sweep);
    sink.flush();

    if (!a.manifest.empty() || !a.out.empty()) {
        Manifest m("sweep", argv);
        m.input(a.model);
        m.input(a.test);
        m.config("loss", loss_json(loss));
        m.config("alpha", alphas[0]);
        json bj = json::array();
        for (double b : betas) bj.push_back(cost_json(b));
        m.config("betas", bj);
        m.config("oracles", oracle_json(oracles));
        m.config("truth", truth == TruthSource::ExactPStar ? "pstar" : "snapshot");
        m.config("mode", a.mode);
        if (!a.out.empty()) m.output(a.out);
        m.write(a.manifest.empty() ? manifest_path_for(a.out) : fs::path(a.manifest));
    }
    return 0;
}

struct DiagnoseArgs {
    std::string model;
    std::string test;
    std::string loss = "brier";
    std::string truth = "auto";
    bool wasserstein = false;
    bool partition_quality = false;
    std::size_t lipschitz = 0;
    bool self_test = false;
    std::uint64_t seed = 7;
    std::size_t trials = 100000;
    std::string out;
};

json lipschitz_spot_check(const CalibratedRouterModel& model, const LossSpec& loss, std::size_t samples,
                          std::uint64_t seed) {
    const auto& entries = model.global_mixture().entries;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
    const double half_b = loss.bound() / 2.0;
    std::size_t violations = 0;
    double worst_ratio = 0.0;
    for (std::size_t t = 0; t < samples; ++t) {
        const auto& a = entries[pick(rng)];
        const auto& b = entries[pick(rng)];
        const double dist = l1_distance(a.snapshot_mean, b.snapshot_mean);
        const double gap = std::abs(expected_loss(loss, a.snapshot_mean, a.weak_pred) -
                                    expected_loss(loss, b.snapshot_mean, a.weak_pred));
        const double egap = std::abs(entropy(loss, a.snapshot_mean) - entropy(loss, b.snapshot_mean));
        if (gap > half_b * dist + 1e-9 || egap > half_b * dist + 1e-9) ++violations;
        if (dist > 0.0) worst_ratio = std::max(worst_ratio, std::max(gap, egap) / dist);
    }
    return {{"samples", samples}, {"violations", violations}, {"constant", half_b}, {"worst_ratio", worst_ratio}};
}

int run_diagnose(const DiagnoseArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    json report = json::object();
    bool failed = false;
    if (a.self_test) {
        const auto r = run_lemma_checks(a.seed, a.trials);
        report["self_test"] = json::parse(r.to_json());
        failed = !r.passed();
    }
    const bool any_model_check = a.wasserstein || a.partition_quality || a.lipschitz > 0;
    if (!a.model.empty()) {
        const auto model = io::load_model(a.model);
        const auto loss = parse_loss(a.loss);
        std::vector<SnapshotExample> test;
        if (!a.test.empty()) test = io::ingest(a.test);
        const bool want_w = a.wasserstein || (!any_model_check && !test.empty());
        const bool want_q = a.partition_quality || (!any_model_check && !test.empty());
        const std::size_t lip = a.lipschitz > 0 ? a.lipschitz : (any_model_check ? 0 : 1000);
        if ((a.wasserstein || a.partition_quality) && test.empty()) {
            throw InvalidInput("--wasserstein and --partition-quality need --test");
        }
        const TruthSource truth = test.empty() ? TruthSource::SnapshotMean : resolve_truth(a.truth, test);
        if (want_w) {
            try {
                const auto bins = wasserstein_error(model, test, truth);
                json jb = json::array();
                double sum = 0.0;
                double weighted = 0.0;
                std::size_t total = 0;
                for (const auto& b : bins) {
                    jb.push_back({{"bin", b.bin.str()},
                                  {"distance", b.distance},
                                  {"model_count", b.model_count},
                                  {"reference_count", b.reference_count}});
                    sum += b.distance;
                    weighted += b.distance * static_cast<double>(b.reference_count);
                    total += b.reference_count;
                }
                report["wasserstein"] = {
                    {"bins", jb},
                    {"mean", bins.empty() ? 0.0 : sum / static_cast<double>(bins.size())},
                    {"weighted_mean", total == 0 ? 0.0 : weighted / static_cast<double>(total)}};
            } catch (const UnsupportedDiagnostic& e) {
                if (a.wasserstein) throw;
                report["wasserstein"] = {{"skipped", e.what()}};
            }
        }
        if (want_q) {
            const auto q = partition_quality(model.partition(), test, loss, truth);
            json jb = json::array();
            for (const auto& b : q.bins) jb.push_back({{"bin", b.bin.str()}, {"count", b.count}, {"quality", b.quality}});
            json empty = json::array();
            for (const auto& b : q.empty_bins) empty.push_back(b.str());
            report["partition_quality"] = {{"loss", loss_json(loss)}, {"bins", jb}, {"empty_bins", empty},
                                           {"aggregate", q.aggregate}};
        }
        if (lip > 0) report["lipschitz"] = lipschitz_spot_check(model, loss, lip, a.seed);
    } else if (any_model_check) {
        throw InvalidInput("model diagnostics need --model");
    } else if (!a.self_test) {
        throw InvalidInput("nothing to diagnose: pass --model or --self-test");
    }

    std::ofstream file;
    std::ostream& sink = open_output(a.out, file, out);
    sink << report.dump() << '\n';
    sink.flush();
    if (!a.out.empty()) {
        Manifest m("diagnose", argv);
        if (!a.model.empty()) m.input(a.model);
        if (!a.test.empty()) m.input(a.test);
        m.seed("diagnose", a.seed);
        m.config("loss", a.loss);
        m.output(a.out);
        m.write(manifest_path_for(a.out));
    }
    if (failed) {
        err << json{{"error", "self_test_failed"}, {"message", "one or more lemma checks failed"}}.dump() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Uncertainty-aware routing from higher-order calibrated predictors", "hocroute"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate-synthetic", "Write synthetic calibration and test datasets");
    g->add_option("--function", gen.function, "sinusoidal, three_steps or piecewise")->capture_default_str();
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--train-size", gen.train_size)->capture_default_str();
    g->add_option("--cal-size", gen.cal_size)->capture_default_str();
    g->add_option("--test-size", gen.test_size)->capture_default_str();
    g->add_option("--k", gen.k, "Labels per calibration example")->capture_default_str();
    g->add_option("--test-k", gen.test_k, "Labels per test example")->capture_default_str();
    g->add_option("--weak-bins", gen.weak_bins)->capture_default_str();
    g->add_option("--out-dir", gen.out_dir)->capture_default_str();

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Fit a partition and store per-bin label mixtures");
    c->add_option("--in", cal.in, "Calibration dataset (JSONL)")->required();
    c->add_option("--partition", cal.partition, "topclass:N, feature:IDX:N or levelset")->capture_default_str();
    c->add_flag("--recalibrate", cal.recalibrate, "Replace predictions by bin centroids");
    c->add_option("--out", cal.out, "Model file")->required();
    c->add_option("--manifest", cal.manifest, "Manifest path (default <out>.manifest.json)");

    RouteArgs route;
    auto* r = app.add_subcommand("route", "Stream routing decisions for JSONL records");
    r->add_option("--model", route.model)->required();
    r->add_option("--loss", route.loss)->required();
    r->add_option("--alpha", route.alphas, "Routing penalty, one per oracle")->required();
    r->add_option("--beta", route.beta, "Abstention penalty or inf")->capture_default_str();
    r->add_option("--oracle", route.oracles, "bayes or aggregated:K:majority|mean, one per --alpha");
    r->add_option("--in", route.in, "Input JSONL, - for stdin")->capture_default_str();
    r->add_option("--out", route.out, "Output JSONL, - for stdout")->capture_default_str();
    r->add_option("--manifest", route.manifest);
    r->add_option("--threads", route.threads)->capture_default_str();

    CurveArgs curve;
    auto* cu = app.add_subcommand("curve", "Routing curves for each loss and policy");
    cu->add_option("--model", curve.model)->required();
    cu->add_option("--test", curve.test)->required();
    cu->add_option("--loss", curve.losses, "Loss spec, repeatable, or 'all'")->capture_default_str();
    cu->add_option("--truth", curve.truth, "auto, pstar or snapshot")->capture_default_str();
    cu->add_option("--mode", curve.mode, "deployed or raw predictions")->capture_default_str();
    cu->add_option("--scores", curve.scores, "External policy as name=scores.csv, repeatable");
    cu->add_option("--out", curve.out, "CSV output (default stdout)");
    cu->add_option("--manifest", curve.manifest);

    SweepArgs sweep;
    auto* s = app.add_subcommand("sweep", "Three-way cost sweep over abstention penalties");
    s->add_option("--model", sweep.model)->required();
    s->add_option("--test", sweep.test)->required();
    s->add_option("--loss", sweep.loss)->capture_default_str();
    s->add_option("--alpha", sweep.alpha)->capture_default_str();
    s->add_option("--beta", sweep.beta, "lo:hi:step, a value, or inf")->capture_default_str();
    s->add_option("--oracle", sweep.oracles);
    s->add_option("--truth", sweep.truth)->capture_default_str();
    s->add_option("--mode", sweep.mode)->capture_default_str();
    s->add_option("--out", sweep.out, "CSV output (default stdout)");
    s->add_option("--manifest", sweep.manifest);

    DiagnoseArgs diag;
    auto* d = app.add_subcommand("diagnose", "Wasserstein error, partition quality, Lipschitz checks, self-test");
    d->add_option("--model", diag.model);
    d->add_option("--test", diag.test, "Reference dataset");
    d->add_option("--loss", diag.loss)->capture_default_str();
    d->add_option("--truth", diag.truth)->capture_default_str();
    d->add_flag("--wasserstein", diag.wasserstein);
    d->add_flag("--partition-quality", diag.partition_quality);
    d->add_option("--lipschitz", diag.lipschitz, "Number of spot-check pairs");
    d->add_flag("--self-test", diag.self_test, "Run the randomized lemma checks");
    d->add_option("--seed", diag.seed)->capture_default_str();
    d->add_option("--trials", diag.trials)->capture_default_str();
    d->add_option("--out", diag.out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (g->parsed()) return run_generate(gen, args, out);
        if (c->parsed()) return run_calibrate(cal, args, out);
        if (r->parsed()) return run_route(route, args, in, out);
        if (cu->parsed()) return run_curve(curve, args, out, err);
        if (s->parsed()) return run_sweep(sweep, args, out);
        if (d->parsed()) return run_diagnose(diag, args, out, err);
    } catch (const Error& e) {
        err << json{{"error", e.code()}, {"message", e.what()}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace hocroute
