#include "affect/train/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "affect/error.hpp"
#include "affect/metrics.hpp"
#include "affect/nn/losses.hpp"
#include "affect/nn/ops.hpp"
#include "affect/optim.hpp"
#include "affect/rng.hpp"

namespace affect::train {
namespace {

constexpr std::uint64_t kDropoutStream = 0x64726f706f7574ULL;  // "dropout"

std::vector<text::TokenSequence> pick(std::span<const text::TokenSequence> seqs, std::span<const std::size_t> idx) {
    std::vector<text::TokenSequence> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(seqs[i]);
    return out;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t c) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][c];
    return out;
}

std::vector<int> argmax_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i] = static_cast<int>(std::max_element(rows[i].begin(), rows[i].end()) - rows[i].begin());
    }
    return out;
}

void put_pearson(std::map<std::string, double>& out, const char* key, std::span<const double> pred,
                 std::span<const double> gold) {
    try {
        out[key] = metrics::pearson(pred, gold);
    } catch (const DataError&) {
        // Constant predictions or gold: the metric is undefined for this epoch.
    }
}

double eval_loss(const std::vector<std::vector<double>>& rows, Task task, const Targets& t) {
    switch (task) {
    case Task::empathy: return nn::loss_mse(column(rows, 0), t.empathy);
    case Task::distress: return nn::loss_mse(column(rows, 0), t.distress);
    case Task::multitask: return nn::loss_multitask(column(rows, 0), column(rows, 1), t.empathy, t.distress);
    case Task::emotion: return nn::loss_cross_entropy(rows, t.labels);
    }
    return 0.0;
}

} // namespace

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed, std::size_t epoch) {
    if (n == 0) throw DataError("make_batches: empty dataset");
    if (batch_size == 0) throw DataError("make_batches: batch_size must be at least 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) {
        Rng rng(mix_seed(seed, epoch));
        affect::shuffle(std::span<std::size_t>(order), rng);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

std::vector<std::vector<std::size_t>> make_batches(const data::Dataset& d, std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed, std::size_t epoch) {
    return make_batches(d.size(), batch_size, shuffle, seed, epoch);
}

Targets Targets::subset(std::span<const std::size_t> idx) const {
    Targets out;
    for (std::size_t i : idx) {
        if (!empathy.empty()) out.empathy.push_back(empathy[i]);
        if (!distress.empty()) out.distress.push_back(distress[i]);
        if (!labels.empty()) out.labels.push_back(labels[i]);
    }
    return out;
}

Targets targets_for(const data::Dataset& d, Task task) {
    Targets t;
    const bool need_e = task == Task::empathy || task == Task::multitask;
    const bool need_d = task == Task::distress || task == Task::multitask;
    for (const auto& r : d.records) {
        if (need_e) {
            if (!r.empathy) throw DataError("record '" + r.id + "' has no empathy score");
            t.empathy.push_back(*r.empathy);
        }
        if (need_d) {
            if (!r.distress) throw DataError("record '" + r.id + "' has no distress score");
            t.distress.push_back(*r.distress);
        }
        if (task == Task::emotion) {
            if (!r.emotion) throw DataError("record '" + r.id + "' has no emotion label");
            t.labels.push_back(data::code(*r.emotion));
        }
    }
    return t;
}

std::vector<text::TokenSequence> encode_all(const data::Dataset& d, const text::Vocab& vocab, std::size_t max_len) {
    std::vector<text::TokenSequence> out;
    out.reserve(d.size());
    for (const auto& r : d.records) out.push_back(text::encode(r.text, vocab, max_len));
    return out;
}

nn::Var task_loss(nn::Tape& tape, const nn::BoundParameters& params, const nn::EncoderConfig& cfg, Task task,
                  std::span<const text::TokenSequence> batch, const Targets& targets, bool train_mode) {
    const nn::Var cls = nn::forward(tape, params, cfg, batch, train_mode);
    const auto heads = nn::head_apply(tape, params, cfg, cls);
    switch (task) {
    case Task::empathy: return nn::mse_loss(tape, heads.at(0), targets.empathy);
    case Task::distress: return nn::mse_loss(tape, heads.at(0), targets.distress);
    case Task::multitask:
        return nn::add(tape, nn::mse_loss(tape, heads.at(0), targets.empathy),
                       nn::mse_loss(tape, heads.at(1), targets.distress));
    case Task::emotion: return nn::cross_entropy_loss(tape, heads.at(0), targets.labels);
    }
    throw Error("unknown task");
}

std::map<std::string, double> evaluate(const nn::Parameters& params, const nn::EncoderConfig& enc, Task task,
                                       std::span<const text::TokenSequence> seqs, const Targets& targets) {
    std::map<std::string, double> out;
    const auto rows = nn::infer(params, enc, seqs);
    switch (task) {
    case Task::empathy: put_pearson(out, "pearson_empathy", column(rows, 0), targets.empathy); break;
    case Task::distress: put_pearson(out, "pearson_distress", column(rows, 0), targets.distress); break;
    case Task::multitask:
        put_pearson(out, "pearson_empathy", column(rows, 0), targets.empathy);
        put_pearson(out, "pearson_distress", column(rows, 1), targets.distress);
        if (out.count("pearson_empathy") && out.count("pearson_distress")) {
            out["pearson_avg"] = (out["pearson_empathy"] + out["pearson_distress"]) / 2.0;
        }
        break;
    case Task::emotion: {
        const auto preds = argmax_rows(rows);
        out["macro_f1"] = metrics::macro_f1(preds, targets.labels).macro;
        out["accuracy"] = metrics::accuracy(preds, targets.labels);
        break;
    }
    }
    return out;
}

TrainConfig resolve(TrainConfig cfg, const text::Vocab& vocab) {
    cfg.encoder.vocab_size = vocab.size();
    cfg.encoder.head_kind = head_kind_for(cfg.task);
    return cfg;
}

TrainResult train(const data::Dataset& train_set, const data::Dataset& dev_set, const text::Vocab& vocab,
                  const TrainConfig& cfg_in) {
    const auto started = std::chrono::steady_clock::now();
    const TrainConfig cfg = resolve(cfg_in, vocab);
    validate(cfg);
    if (train_set.empty()) throw DataError("training set is empty");
    if (dev_set.empty()) throw DataError("dev set is empty");
    const Targets train_targets = targets_for(train_set, cfg.task);
    const Targets dev_targets = targets_for(dev_set, cfg.task);
    const auto train_seqs = encode_all(train_set, vocab, cfg.encoder.max_len);
    const auto dev_seqs = encode_all(dev_set, vocab, cfg.encoder.max_len);
    const std::string metric_name(to_string(cfg.snapshot_metric));

    nn::Parameters params = nn::init_params(cfg.encoder, cfg.seed);
    nn::Parameters grads = nn::zeros_like(params);
    optim::OptimState state = optim::init_state(params);

    TrainResult result;
    result.report.seed = cfg.seed;
    result.report.snapshot_metric = metric_name;
    nn::Parameters best = params;

    std::uint64_t global_step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (const auto& batch : make_batches(train_set.size(), cfg.batch_size, cfg.shuffle, cfg.seed, epoch)) {
            grads.for_each([](const std::string&, nn::Tensor& t) { t.zero(); });
            const auto seqs = pick(train_seqs, batch);
            const Targets targets = train_targets.subset(batch);
            nn::Tape tape(true, mix_seed(mix_seed(cfg.seed, kDropoutStream), global_step));
            const auto bound = nn::bind(tape, params, &grads);
            const nn::Var loss = task_loss(tape, bound, cfg.encoder, cfg.task, seqs, targets, true);
            loss_sum += tape.value(loss).data[0] * static_cast<double>(batch.size());
            tape.backward(loss);
            optim::step(params, grads, state, cfg.optimizer);
            ++global_step;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train_set.size());
        rec.dev = evaluate(params, cfg.encoder, cfg.task, dev_seqs, dev_targets);
        if (const auto it = rec.dev.find(metric_name); it != rec.dev.end()) rec.snapshot_value = it->second;
        if (cfg.eval_train) {
            if (cfg.task == Task::emotion) {
                rec.train_metric = evaluate(params, cfg.encoder, cfg.task, train_seqs, train_targets).at("accuracy");
            } else {
                rec.train_metric = eval_loss(nn::infer(params, cfg.encoder, train_seqs), cfg.task, train_targets);
            }
        }
        if (rec.snapshot_value && (!result.report.best_metric || *rec.snapshot_value > *result.report.best_metric)) {
            result.report.best_metric = rec.snapshot_value;
            result.report.best_epoch = static_cast<int>(epoch);
            best = params;
        }
        result.report.epochs.push_back(std::move(rec));
    }

    Checkpoint& ckpt = result.checkpoint;
    ckpt.config = cfg;
    ckpt.vocab_hash = vocab.hash();
    ckpt.params = std::move(best);
    ckpt.best_metric = result.report.best_metric;
    ckpt.best_epoch = result.report.best_epoch;
    ckpt.seed = cfg.seed;
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

Predictions predict(const Checkpoint& ckpt, const data::Dataset& d, const text::Vocab& vocab,
                    const PredictOptions& options) {
    if (vocab.hash() != ckpt.vocab_hash) {
        throw DataError("vocabulary hash " + vocab.hash() + " does not match checkpoint (" + ckpt.vocab_hash + ")");
    }
    const auto& enc = ckpt.config.encoder;
    const auto seqs = encode_all(d, vocab, enc.max_len);
    const auto rows = nn::infer(ckpt.params, enc, seqs);
    std::vector<std::string> ids;
    ids.reserve(d.size());
    for (const auto& r : d.records) ids.push_back(r.id);

    const Task task = ckpt.config.task;
    if (task == Task::emotion) {
        ClassificationPredictions p;
        p.ids = std::move(ids);
        for (const auto& row : rows) {
            const auto probs = nn::softmax(row);
            ClassScores s{};
            std::copy(probs.begin(), probs.end(), s.begin());
            p.probs.push_back(s);
            p.labels.push_back(argmax_label(s));
        }
        return p;
    }
    auto finish = [&](std::vector<double> v) {
        if (options.clamp_scores) {
            for (double& x : v) x = std::clamp(x, data::kScoreMin, data::kScoreMax);
        }
        return v;
    };
    RegressionPredictions p;
    p.ids = std::move(ids);
    if (task == Task::empathy) p.empathy = finish(column(rows, 0));
    if (task == Task::distress) p.distress = finish(column(rows, 0));
    if (task == Task::multitask) {
        p.empathy = finish(column(rows, 0));
        p.distress = finish(column(rows, 1));
    }
    return p;
}

SweepReport summarize(std::string metric, std::vector<SweepEntry> entries) {
    SweepReport r;
    r.metric = std::move(metric);
    r.entries = std::move(entries);
    std::vector<double> values;
    for (const auto& e : r.entries) {
        if (e.best_metric) values.push_back(*e.best_metric);
    }
    if (values.empty()) return r;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    r.mean = mean;
    r.min = *std::min_element(values.begin(), values.end());
    r.max = *std::max_element(values.begin(), values.end());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        r.stddev = std::sqrt(ss / (n - 1.0));
    }
    return r;
}

SweepReport seed_sweep(const data::Dataset& train_set, const data::Dataset& dev_set, const text::Vocab& vocab,
                       const TrainConfig& cfg, std::span<const std::uint64_t> seeds, std::size_t jobs) {
    if (seeds.size() < 2) throw DataError("seed sweep needs at least two seeds");
    std::vector<SweepEntry> entries(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            try {
                TrainConfig c = cfg;
                c.seed = seeds[i];
                const TrainResult res = train(train_set, dev_set, vocab, c);
                entries[i] = SweepEntry{seeds[i], res.report.best_metric, res.report.best_epoch};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, seeds.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return summarize(std::string(to_string(cfg.snapshot_metric)), std::move(entries));
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

} // namespace

nlohmann::json to_json(const TrainReport& report) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : report.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"dev", e.dev},
                          {"snapshot_value", opt(e.snapshot_value)},
                          {"train_metric", opt(e.train_metric)}});
    }
    return {{"epochs", epochs},
            {"best_epoch", report.best_epoch},
            {"best_metric", opt(report.best_metric)},
            {"snapshot_metric", report.snapshot_metric},
            {"wall_seconds", report.wall_seconds},
            {"seed", report.seed}};
}

nlohmann::json to_json(const SweepReport& report) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"seed", e.seed}, {"best_metric", opt(e.best_metric)}, {"best_epoch", e.best_epoch}});
    }
    return {{"metric", report.metric}, {"entries", entries},   {"mean", opt(report.mean)},
            {"stddev", opt(report.stddev)}, {"min", opt(report.min)}, {"max", opt(report.max)}};
}

} // namespace affect::train
