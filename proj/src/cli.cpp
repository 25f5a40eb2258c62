#include "affect/cli.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "affect/augment.hpp"
#include "affect/common.hpp"
#include "affect/data.hpp"
#include "affect/ensemble.hpp"
#include "affect/error.hpp"
#include "affect/kernels.hpp"
#include "affect/metrics.hpp"
#include "affect/text.hpp"
#include "affect/train/trainer.hpp"
#include "json.hpp"

namespace affect::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool quiet = false;
    CLI::Option* seed_opt = nullptr;
};

/// Collects what a command read and wrote; written as <out>/manifest.json.
class Manifest {
public:
    Manifest(std::string command, const Globals& g) : command_(std::move(command)), started_(Clock::now()) {
        doc_["command"] = command_;
        doc_["tool_version"] = std::string(kVersion);
        doc_["kernels"] = std::string(kernels::to_string(kernels::active().backend));
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::array();
        doc_["seed_defaulted"] = g.seed_opt == nullptr || g.seed_opt->count() == 0;
    }

    void input(const fs::path& path) { doc_["inputs"][path.string()] = hex64(fnv1a64(read_file(path))); }
    void output(const fs::path& path) { doc_["outputs"].push_back(path.string()); }
    json& operator[](const char* key) { return doc_[key]; }

    void write(const fs::path& dir) {
        doc_["wall_seconds"] = std::chrono::duration<double>(Clock::now() - started_).count();
        write_file(dir / "manifest.json", doc_.dump(2) + "\n");
    }

private:
    using Clock = std::chrono::steady_clock;
    std::string command_;
    Clock::time_point started_;
    json doc_;
};

fs::path out_dir(const Globals& g) {
    if (g.out_dir.empty()) throw UsageError("--out <dir> is required");
    fs::create_directories(g.out_dir);
    return fs::path(g.out_dir);
}

void emit(const fs::path& path, std::string_view contents, Manifest& m) {
    write_file(path, contents);
    m.output(path);
}

data::Split split_arg(const std::string& name) {
    const auto s = data::parse_split(name);
    if (!s) throw UsageError("unknown split '" + name + "'");
    return *s;
}

json read_config(const Globals& g) {
    if (g.config_path.empty()) return json::object();
    try {
        return json::parse(read_file(g.config_path));
    } catch (const json::exception& e) {
        throw DataError("config " + g.config_path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::string split = "train";
};

int cmd_ingest(const IngestArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("ingest", g);
    m.input(a.input);
    const data::Split split = split_arg(a.split);
    const data::Dataset d = split == data::Split::pool ? data::load_pool_tsv(a.input) : data::load_task_tsv(a.input, split);
    emit(dir / "dataset.tsv", data::to_tsv(d), m);
    const bool labeled = std::all_of(d.records.begin(), d.records.end(), [](const auto& r) { return r.emotion.has_value(); });
    m["config"] = {{"input", a.input}, {"split", data::to_string(split)}};
    m["records"] = d.size();
    if (labeled) {
        const auto h = data::class_histogram(d);
        emit(dir / "histogram.csv", data::histogram_csv(h), m);
        m["histogram"] = h;
    } else {
        m["histogram"] = nullptr;
    }
    m.write(dir);
    if (!g.quiet) out << "ingested " << d.size() << " records (" << data::to_string(split) << ")\n";
    return kExitOk;
}

struct AugmentArgs {
    std::string scheme;
    std::string base;
    std::string pool;
    std::size_t total = 2800;
    std::size_t count = 1000;
};

int cmd_augment(const AugmentArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("augment", g);
    augment::AugmentationSpec spec;
    if (a.scheme == "ba") spec.scheme = augment::Scheme::balanced;
    else if (a.scheme == "ra") spec.scheme = augment::Scheme::random;
    else throw UsageError("--scheme must be ba or ra");
    spec.total_target = a.total;
    spec.sample_count = a.count;
    spec.seed = g.seed;
    m.input(a.base);
    m.input(a.pool);
    const data::Dataset base = data::load_task_tsv(a.base, data::Split::train);
    const data::Dataset pool = data::load_pool_tsv(a.pool);
    const data::Dataset result = augment::apply(base, pool, spec);
    emit(dir / "augmented.tsv", data::to_tsv(result), m);
    m["config"] = {{"scheme", a.scheme}, {"base", a.base}, {"pool", a.pool}, {"seed", g.seed}};
    if (spec.scheme == augment::Scheme::balanced) m["config"]["total"] = a.total;
    else m["config"]["count"] = a.count;
    m["seeds"] = {g.seed};
    m["records"] = result.size();
    m["base_records"] = base.size();
    m["with_replacement_used"] = result.with_replacement_used;
    bool labeled = std::all_of(result.records.begin(), result.records.end(), [](const auto& r) { return r.emotion.has_value(); });
    m["histogram"] = labeled ? json(data::class_histogram(result)) : json(nullptr);
    m.write(dir);
    if (!g.quiet) out << "wrote " << result.size() << " records\n";
    return kExitOk;
}

struct TrainArgs {
    std::string train_path;
    std::string dev_path;
    std::string vocab_path;
    std::optional<std::string> task;
    std::optional<std::string> preset;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<double> lr;
    std::optional<double> weight_decay;
    std::optional<std::string> snapshot_metric;
    std::optional<std::size_t> d_model, layers, heads, d_ff, max_len;
    std::optional<double> dropout;
    bool eval_train = false;
    bool no_shuffle = false;
    // seed-sweep only
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
};

/// Preset defaults, then the config file, then flags.
train::TrainConfig resolve_config(const TrainArgs& a, const Globals& g) {
    const json file = read_config(g);
    train::Task task = train::Task::emotion;
    train::Preset preset = train::Preset::desk_scale;
    auto task_name = a.task ? a.task : (file.contains("task") ? std::optional(file["task"].get<std::string>()) : std::nullopt);
    auto preset_name =
        a.preset ? a.preset : (file.contains("preset") ? std::optional(file["preset"].get<std::string>()) : std::nullopt);
    if (task_name) {
        const auto t = train::parse_task(*task_name);
        if (!t && a.task) throw UsageError("unknown task '" + *task_name + "'");
        if (!t) throw DataError("unknown task '" + *task_name + "' in config");
        task = *t;
    }
    if (preset_name) {
        const auto p = train::parse_preset(*preset_name);
        if (!p) throw UsageError("unknown preset '" + *preset_name + "'");
        preset = *p;
    }
    train::TrainConfig c = train::apply_json(train::preset_config(preset, task), file);
    c.task = task;
    c.preset = preset;
    c.encoder.head_kind = train::head_kind_for(task);
    if (!file.contains("snapshot_metric")) c.snapshot_metric = train::default_snapshot_metric(task);
    if (a.epochs) c.epochs = *a.epochs;
    else if (!file.contains("epochs")) throw UsageError("--epochs is required (or an 'epochs' key in --config)");
    if (a.batch_size) c.batch_size = *a.batch_size;
    if (a.lr) c.optimizer.lr = *a.lr;
    if (a.weight_decay) c.optimizer.weight_decay = *a.weight_decay;
    if (a.snapshot_metric) {
        const auto sm = train::parse_snapshot_metric(*a.snapshot_metric);
        if (!sm) throw UsageError("unknown snapshot metric '" + *a.snapshot_metric + "'");
        c.snapshot_metric = *sm;
    }
    if (a.d_model) c.encoder.d_model = *a.d_model;
    if (a.layers) c.encoder.n_layers = *a.layers;
    if (a.heads) c.encoder.n_heads = *a.heads;
    if (a.d_ff) c.encoder.d_ff = *a.d_ff;
    if (a.max_len) c.encoder.max_len = *a.max_len;
    if (a.dropout) c.encoder.dropout_rate = *a.dropout;
    if (a.eval_train) c.eval_train = true;
    if (a.no_shuffle) c.shuffle = false;
    if (g.seed_opt != nullptr && g.seed_opt->count() > 0) c.seed = g.seed;
    return c;
}

struct Prepared {
    data::Dataset train_set;
    data::Dataset dev_set;
    text::Vocab vocab;
    train::TrainConfig cfg;
};

Prepared prepare(const TrainArgs& a, const Globals& g, Manifest& m) {
    Prepared p;
    p.cfg = resolve_config(a, g);
    m.input(a.train_path);
    m.input(a.dev_path);
    p.train_set = data::load_task_tsv(a.train_path, data::Split::train);
    p.dev_set = data::load_task_tsv(a.dev_path, data::Split::dev);
    if (!a.vocab_path.empty()) {
        m.input(a.vocab_path);
        p.vocab = text::Vocab::load(a.vocab_path);
    } else {
        p.vocab = text::build_vocab(p.train_set, p.cfg.vocab_max_size, p.cfg.vocab_min_freq);
    }
    p.cfg = train::resolve(p.cfg, p.vocab);
    train::validate(p.cfg);
    return p;
}

int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("train", g);
    Prepared p = prepare(a, g, m);
    const train::TrainResult res = train::train(p.train_set, p.dev_set, p.vocab, p.cfg);
    emit(dir / "vocab.tsv", p.vocab.serialize(), m);
    emit(dir / "checkpoint.bin", train::serialize_checkpoint(res.checkpoint), m);
    emit(dir / "train_report.json", train::to_json(res.report).dump(2) + "\n", m);
    m["config"] = train::to_json(p.cfg);
    m["seeds"] = {p.cfg.seed};
    m["seed_defaulted"] = (g.seed_opt == nullptr || g.seed_opt->count() == 0) && !read_config(g).contains("seed");
    m.write(dir);
    if (!g.quiet) {
        out << "best epoch " << res.report.best_epoch << ", " << res.report.snapshot_metric << " = "
            << (res.report.best_metric ? format_double(*res.report.best_metric) : std::string("n/a")) << "\n";
    }
    return kExitOk;
}

int cmd_seed_sweep(const TrainArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("seed-sweep", g);
    Prepared p = prepare(a, g, m);
    if (a.seeds.size() < 2) throw UsageError("--seeds needs at least two values");
    const auto report = train::seed_sweep(p.train_set, p.dev_set, p.vocab, p.cfg, a.seeds, a.jobs);
    emit(dir / "sweep.json", train::to_json(report).dump(2) + "\n", m);
    m["config"] = train::to_json(p.cfg);
    m["config"]["jobs"] = a.jobs;
    m["seeds"] = a.seeds;
    m["seed_defaulted"] = false;
    m.write(dir);
    if (!g.quiet) {
        for (const auto& e : report.entries) {
            out << "seed " << e.seed << ": "
                << (e.best_metric ? format_double(*e.best_metric) : std::string("n/a")) << "\n";
        }
        if (report.mean) out << "mean " << format_double(*report.mean) << "\n";
    }
    return kExitOk;
}

struct PredictArgs {
    std::string checkpoint;
    std::string vocab;
    std::string input;
    bool clamp = false;
};

int cmd_predict(const PredictArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("predict", g);
    m.input(a.checkpoint);
    m.input(a.vocab);
    m.input(a.input);
    const train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint);
    const text::Vocab vocab = text::Vocab::load(a.vocab);
    const data::Dataset d = data::load_task_tsv(a.input, data::Split::test);
    const auto preds = train::predict(ckpt, d, vocab, train::PredictOptions{a.clamp});
    emit(dir / "predictions.tsv", train::to_tsv(preds), m);
    m["config"] = {{"checkpoint", a.checkpoint}, {"vocab", a.vocab}, {"input", a.input}, {"clamp", a.clamp},
                   {"task", train::to_string(ckpt.config.task)}};
    m.write(dir);
    if (!g.quiet) out << "predicted " << d.size() << " records\n";
    return kExitOk;
}

struct EnsembleArgs {
    std::string task;
    std::string space = "probability";
    std::vector<std::string> files;
};

int cmd_ensemble(const EnsembleArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("ensemble", g);
    const auto space = ensemble::parse_score_space(a.space);
    if (!space) throw UsageError("--space must be probability or logit");
    if (a.files.empty()) throw UsageError("ensemble needs at least one prediction file");
    std::vector<train::Predictions> members;
    for (const auto& f : a.files) {
        m.input(f);
        members.push_back(train::load_predictions(f));
    }
    m["config"] = {{"task", a.task}, {"members", a.files}};
    if (a.task == "regression") {
        std::vector<train::RegressionPredictions> reg;
        for (auto& mem : members) {
            auto* r = std::get_if<train::RegressionPredictions>(&mem);
            if (r == nullptr) throw DataError("classification prediction file given to a regression ensemble");
            reg.push_back(std::move(*r));
        }
        emit(dir / "ensemble.tsv", train::to_tsv(ensemble::ensemble_regression(reg)), m);
    } else if (a.task == "classification") {
        std::vector<train::ClassificationPredictions> cls;
        for (auto& mem : members) {
            auto* c = std::get_if<train::ClassificationPredictions>(&mem);
            if (c == nullptr) throw DataError("regression prediction file given to a classification ensemble");
            cls.push_back(std::move(*c));
        }
        const auto result = ensemble::ensemble_classification(cls, *space);
        emit(dir / "ensemble.tsv", train::to_tsv(result.predictions()), m);
        std::ostringstream raw;
        raw << "id";
        for (auto name : data::kEmotionNames) raw << "\ts_" << name;
        raw << "\tlabel\n";
        for (std::size_t i = 0; i < result.ids.size(); ++i) {
            raw << escape_field(result.ids[i]);
            for (double v : result.rows[i].sum) raw << '\t' << format_double(v);
            raw << '\t' << data::to_string(result.rows[i].label) << '\n';
        }
        emit(dir / "ensemble_scores.tsv", raw.str(), m);
        m["config"]["score_space"] = ensemble::to_string(*space);
    } else {
        throw UsageError("--task must be regression or classification");
    }
    m.write(dir);
    if (!g.quiet) out << "combined " << a.files.size() << " members\n";
    return kExitOk;
}

struct EvalArgs {
    std::string predictions;
    std::string gold;
};

int cmd_eval(const EvalArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("eval", g);
    m.input(a.predictions);
    m.input(a.gold);
    const auto preds = train::load_predictions(a.predictions);
    const data::Dataset gold = data::load_task_tsv(a.gold, data::Split::dev);
    const metrics::EvalReport report = metrics::build_report(preds, gold);
    const json j = metrics::to_json(report);
    emit(dir / "report.json", j.dump(2) + "\n", m);
    if (report.confusion) {
        emit(dir / "confusion.csv", metrics::confusion_csv(*report.confusion), m);
        emit(dir / "confusion_normalized.csv", metrics::confusion_normalized_csv(*report.confusion), m);
    }
    if (report.gold_histogram) emit(dir / "histogram.csv", data::histogram_csv(*report.gold_histogram), m);
    m["config"] = {{"predictions", a.predictions}, {"gold", a.gold}};
    m.write(dir);
    if (!g.quiet) {
        if (report.macro_f1) {
            out << "macro_f1 " << format_double(*report.macro_f1) << " accuracy " << format_double(*report.accuracy)
                << "\n";
        }
        if (report.pearson_empathy) out << "pearson_empathy " << format_double(*report.pearson_empathy) << "\n";
        if (report.pearson_distress) out << "pearson_distress " << format_double(*report.pearson_distress) << "\n";
        if (report.pearson_avg) out << "pearson_avg " << format_double(*report.pearson_avg) << "\n";
    }
    return kExitOk;
}

struct ReportArgs {
    std::vector<std::string> entries;  // [label=]report.json
};

std::string fixed(const json& v, int digits, double scale = 1.0) {
    if (v.is_null()) return "-";
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v.get<double>() * scale;
    return os.str();
}

int cmd_report(const ReportArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = out_dir(g);
    Manifest m("report", g);
    if (a.entries.empty()) throw UsageError("report needs at least one eval report");
    std::ostringstream cls, reg;
    cls << "| Model | Macro F1 | Accuracy |\n|---|---|---|\n";
    reg << "| Model | Pearson empathy | Pearson distress | Pearson avg |\n|---|---|---|---|\n";
    bool any_cls = false, any_reg = false;
    json rows = json::array();
    for (const auto& entry : a.entries) {
        const auto eq = entry.find('=');
        const std::string label = eq == std::string::npos ? fs::path(entry).parent_path().filename().string() : entry.substr(0, eq);
        const std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
        m.input(path);
        json r;
        try {
            r = json::parse(read_file(path));
        } catch (const json::exception& e) {
            throw DataError("report " + path + ": " + e.what());
        }
        if (!r.contains("task")) throw DataError("report " + path + " lacks 'task'");
        if (r["task"] == "classification") {
            any_cls = true;
            cls << "| " << label << " | " << fixed(r["macro_f1"], 4) << " | " << fixed(r["accuracy"], 2, 100.0) << " |\n";
        } else {
            any_reg = true;
            reg << "| " << label << " | " << fixed(r["pearson_empathy"], 4) << " | " << fixed(r["pearson_distress"], 4)
                << " | " << fixed(r["pearson_avg"], 4) << " |\n";
        }
        rows.push_back({{"label", label}, {"path", path}});
    }
    std::string md;
    if (any_cls) md += cls.str();
    if (any_cls && any_reg) md += "\n";
    if (any_reg) md += reg.str();
    emit(dir / "report.md", md, m);
    m["config"] = {{"entries", rows}};
    m.write(dir);
    if (!g.quiet) out << md;
    return kExitOk;
}

void add_train_flags(CLI::App* sub, TrainArgs& a) {
    sub->add_option("--train", a.train_path, "Training TSV")->required();
    sub->add_option("--dev", a.dev_path, "Dev TSV (snapshot selection)")->required();
    sub->add_option("--vocab", a.vocab_path, "Existing vocabulary (default: build from --train)");
    sub->add_option("--task", a.task, "empathy | distress | multitask | emotion");
    sub->add_option("--preset", a.preset, "desk_scale | paper_faithful");
    sub->add_option("--epochs", a.epochs, "Number of epochs");
    sub->add_option("--batch-size", a.batch_size);
    sub->add_option("--lr", a.lr);
    sub->add_option("--weight-decay", a.weight_decay);
    sub->add_option("--snapshot-metric", a.snapshot_metric);
    sub->add_option("--d-model", a.d_model);
    sub->add_option("--layers", a.layers);
    sub->add_option("--heads", a.heads);
    sub->add_option("--d-ff", a.d_ff);
    sub->add_option("--max-len", a.max_len);
    sub->add_option("--dropout", a.dropout);
    sub->add_flag("--eval-train", a.eval_train, "Record train-set metric each epoch");
    sub->add_flag("--no-shuffle", a.no_shuffle);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Empathy/distress regression and emotion classification toolkit", "affect"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Training config JSON");
    g.seed_opt = app.add_option("--seed", g.seed, "Random seed (default 0)");
    app.add_option("--out", g.out_dir, "Output directory");
    app.add_flag("--quiet", g.quiet, "Suppress progress output");
    app.add_flag_callback("--version", [&] { throw CLI::CallForVersion(std::string(kVersion), 0); });

    IngestArgs ingest;
    auto* s_ingest = app.add_subcommand("ingest", "Validate a task or pool TSV and emit its class histogram");
    s_ingest->add_option("--input", ingest.input)->required();
    s_ingest->add_option("--split", ingest.split, "train | dev | test | pool");

    AugmentArgs aug;
    auto* s_aug = app.add_subcommand("augment", "Balanced (ba) or random (ra) augmentation from a pool");
    s_aug->add_option("--scheme", aug.scheme)->required();
    s_aug->add_option("--base", aug.base)->required();
    s_aug->add_option("--pool", aug.pool)->required();
    s_aug->add_option("--total", aug.total, "BA total (multiple of 7)");
    s_aug->add_option("--count", aug.count, "RA sample count");

    TrainArgs tr;
    auto* s_train = app.add_subcommand("train", "Train with best-on-dev snapshotting");
    add_train_flags(s_train, tr);

    TrainArgs sw;
    auto* s_sweep = app.add_subcommand("seed-sweep", "Train once per seed and summarize the spread");
    add_train_flags(s_sweep, sw);
    s_sweep->add_option("--seeds", sw.seeds, "Seeds, comma separated")->required()->delimiter(',');
    s_sweep->add_option("--jobs", sw.jobs, "Concurrent runs");

    PredictArgs pr;
    auto* s_pred = app.add_subcommand("predict", "Write predictions from a checkpoint");
    s_pred->add_option("--checkpoint", pr.checkpoint)->required();
    s_pred->add_option("--vocab", pr.vocab)->required();
    s_pred->add_option("--input", pr.input)->required();
    s_pred->add_flag("--clamp", pr.clamp, "Clamp regression outputs to [1,7]");

    EnsembleArgs en;
    auto* s_ens = app.add_subcommand("ensemble", "Average regression or sum classification predictions");
    s_ens->add_option("--task", en.task, "regression | classification")->required();
    s_ens->add_option("--space", en.space, "probability | logit");
    s_ens->add_option("files", en.files, "Member prediction files")->required();

    EvalArgs ev;
    auto* s_eval = app.add_subcommand("eval", "Score predictions against gold data");
    s_eval->add_option("--predictions", ev.predictions)->required();
    s_eval->add_option("--gold", ev.gold)->required();

    ReportArgs rp;
    auto* s_report = app.add_subcommand("report", "Tabulate eval reports as markdown");
    s_report->add_option("reports", rp.entries, "[label=]report.json")->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
        std::reverse(rest.begin(), rest.end());
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (s_ingest->parsed()) return cmd_ingest(ingest, g, out);
        if (s_aug->parsed()) return cmd_augment(aug, g, out);
        if (s_train->parsed()) return cmd_train(tr, g, out);
        if (s_sweep->parsed()) return cmd_seed_sweep(sw, g, out);
        if (s_pred->parsed()) return cmd_predict(pr, g, out);
        if (s_ens->parsed()) return cmd_ensemble(en, g, out);
        if (s_eval->parsed()) return cmd_eval(ev, g, out);
        if (s_report->parsed()) return cmd_report(rp, g, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

} // namespace affect::cli
