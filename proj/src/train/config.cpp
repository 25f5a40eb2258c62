#include "affect/train/config.hpp"

#include <set>
#include <string>

#include "affect/error.hpp"

namespace affect::train {

std::string_view to_string(Task task) {
    switch (task) {
    case Task::empathy: return "empathy";
    case Task::distress: return "distress";
    case Task::multitask: return "multitask";
    case Task::emotion: return "emotion";
    }
    return "unknown";
}

std::string_view to_string(SnapshotMetric metric) {
    switch (metric) {
    case SnapshotMetric::pearson_empathy: return "pearson_empathy";
    case SnapshotMetric::pearson_distress: return "pearson_distress";
    case SnapshotMetric::pearson_avg: return "pearson_avg";
    case SnapshotMetric::macro_f1: return "macro_f1";
    }
    return "unknown";
}

std::string_view to_string(Preset preset) {
    return preset == Preset::paper_faithful ? "paper_faithful" : "desk_scale";
}

std::optional<Task> parse_task(std::string_view name) {
    for (Task t : {Task::empathy, Task::distress, Task::multitask, Task::emotion}) {
        if (name == to_string(t)) return t;
    }
    return std::nullopt;
}

std::optional<SnapshotMetric> parse_snapshot_metric(std::string_view name) {
    for (SnapshotMetric m : {SnapshotMetric::pearson_empathy, SnapshotMetric::pearson_distress,
                             SnapshotMetric::pearson_avg, SnapshotMetric::macro_f1}) {
        if (name == to_string(m)) return m;
    }
    return std::nullopt;
}

std::optional<Preset> parse_preset(std::string_view name) {
    if (name == "paper_faithful") return Preset::paper_faithful;
    if (name == "desk_scale") return Preset::desk_scale;
    return std::nullopt;
}

nn::HeadKind head_kind_for(Task task) {
    switch (task) {
    case Task::empathy:
    case Task::distress: return nn::HeadKind::regression_single;
    case Task::multitask: return nn::HeadKind::regression_dual;
    case Task::emotion: return nn::HeadKind::classify7;
    }
    return nn::HeadKind::classify7;
}

SnapshotMetric default_snapshot_metric(Task task) {
    switch (task) {
    case Task::empathy: return SnapshotMetric::pearson_empathy;
    case Task::distress: return SnapshotMetric::pearson_distress;
    case Task::multitask: return SnapshotMetric::pearson_avg;
    case Task::emotion: return SnapshotMetric::macro_f1;
    }
    return SnapshotMetric::macro_f1;
}

bool is_regression(Task task) { return task != Task::emotion; }

TrainConfig preset_config(Preset preset, Task task) {
    TrainConfig c;
    c.preset = preset;
    c.task = task;
    c.snapshot_metric = default_snapshot_metric(task);
    c.batch_size = (task == Task::empathy || task == Task::distress) ? 16 : 8;
    c.shuffle = true;
    c.optimizer = optim::AdamWConfig{};
    c.optimizer.lr = preset == Preset::paper_faithful ? 1e-5 : 1e-3;
    c.encoder.d_model = 64;
    c.encoder.n_layers = 2;
    c.encoder.n_heads = 4;
    c.encoder.d_ff = 128;
    c.encoder.max_len = 64;
    c.encoder.dropout_rate = 0.1;
    c.encoder.head_kind = head_kind_for(task);
    return c;
}

void validate(const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw DataError("batch_size must be at least 1");
    cfg.optimizer.validate();
    cfg.encoder.validate();
    if (cfg.encoder.head_kind != head_kind_for(cfg.task)) {
        throw DataError("encoder head_kind " + std::string(nn::to_string(cfg.encoder.head_kind)) +
                        " does not match task " + std::string(to_string(cfg.task)));
    }
    const auto m = cfg.snapshot_metric;
    bool ok = false;
    switch (cfg.task) {
    case Task::empathy: ok = m == SnapshotMetric::pearson_empathy; break;
    case Task::distress: ok = m == SnapshotMetric::pearson_distress; break;
    case Task::multitask: ok = m != SnapshotMetric::macro_f1; break;
    case Task::emotion: ok = m == SnapshotMetric::macro_f1; break;
    }
    if (!ok) {
        throw DataError("snapshot metric " + std::string(to_string(m)) + " is not produced by task " +
                        std::string(to_string(cfg.task)));
    }
    if (cfg.vocab_max_size < 3 || cfg.vocab_min_freq == 0) {
        throw DataError("vocab_max_size must be >= 3 and vocab_min_freq >= 1");
    }
}

nlohmann::json to_json(const TrainConfig& cfg) {
    return {
        {"task", to_string(cfg.task)},
        {"batch_size", cfg.batch_size},
        {"epochs", cfg.epochs},
        {"seed", cfg.seed},
        {"shuffle", cfg.shuffle},
        {"snapshot_metric", to_string(cfg.snapshot_metric)},
        {"preset", to_string(cfg.preset)},
        {"eval_train", cfg.eval_train},
        {"vocab_max_size", cfg.vocab_max_size},
        {"vocab_min_freq", cfg.vocab_min_freq},
        {"optimizer",
         {{"lr", cfg.optimizer.lr},
          {"beta1", cfg.optimizer.beta1},
          {"beta2", cfg.optimizer.beta2},
          {"eps", cfg.optimizer.eps},
          {"weight_decay", cfg.optimizer.weight_decay}}},
        {"encoder",
         {{"vocab_size", cfg.encoder.vocab_size},
          {"d_model", cfg.encoder.d_model},
          {"n_layers", cfg.encoder.n_layers},
          {"n_heads", cfg.encoder.n_heads},
          {"d_ff", cfg.encoder.d_ff},
          {"max_len", cfg.encoder.max_len},
          {"dropout_rate", cfg.encoder.dropout_rate},
          {"head_kind", nn::to_string(cfg.encoder.head_kind)}}},
    };
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw DataError("unknown config key '" + where + key + "'");
    }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

TrainConfig apply_json(TrainConfig c, const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("training config must be a JSON object");
    try {
        reject_unknown(j,
                       {"task", "batch_size", "epochs", "seed", "shuffle", "snapshot_metric", "preset", "eval_train",
                        "vocab_max_size", "vocab_min_freq", "optimizer", "encoder"},
                       "");
        if (j.contains("task")) {
            const auto t = parse_task(j.at("task").get<std::string>());
            if (!t) throw DataError("unknown task " + j.at("task").dump());
            c.task = *t;
            if (!j.contains("snapshot_metric")) c.snapshot_metric = default_snapshot_metric(*t);
        }
        if (j.contains("snapshot_metric")) {
            const auto m = parse_snapshot_metric(j.at("snapshot_metric").get<std::string>());
            if (!m) throw DataError("unknown snapshot_metric " + j.at("snapshot_metric").dump());
            c.snapshot_metric = *m;
        }
        if (j.contains("preset")) {
            const auto p = parse_preset(j.at("preset").get<std::string>());
            if (!p) throw DataError("unknown preset " + j.at("preset").dump());
            c.preset = *p;
        }
        take(j, "batch_size", c.batch_size);
        take(j, "epochs", c.epochs);
        take(j, "seed", c.seed);
        take(j, "shuffle", c.shuffle);
        take(j, "eval_train", c.eval_train);
        take(j, "vocab_max_size", c.vocab_max_size);
        take(j, "vocab_min_freq", c.vocab_min_freq);
        if (j.contains("optimizer")) {
            const auto& o = j.at("optimizer");
            reject_unknown(o, {"lr", "beta1", "beta2", "eps", "weight_decay"}, "optimizer.");
            take(o, "lr", c.optimizer.lr);
            take(o, "beta1", c.optimizer.beta1);
            take(o, "beta2", c.optimizer.beta2);
            take(o, "eps", c.optimizer.eps);
            take(o, "weight_decay", c.optimizer.weight_decay);
        }
        c.encoder.head_kind = head_kind_for(c.task);
        if (j.contains("encoder")) {
            const auto& e = j.at("encoder");
            reject_unknown(e, {"vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_len", "dropout_rate", "head_kind"},
                           "encoder.");
            take(e, "vocab_size", c.encoder.vocab_size);
            take(e, "d_model", c.encoder.d_model);
            take(e, "n_layers", c.encoder.n_layers);
            take(e, "n_heads", c.encoder.n_heads);
            take(e, "d_ff", c.encoder.d_ff);
            take(e, "max_len", c.encoder.max_len);
            take(e, "dropout_rate", c.encoder.dropout_rate);
            if (e.contains("head_kind")) {
                const auto h = nn::parse_head_kind(e.at("head_kind").get<std::string>());
                if (!h) throw DataError("unknown head_kind " + e.at("head_kind").dump());
                c.encoder.head_kind = *h;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("training config: ") + e.what());
    }
    return c;
}

TrainConfig from_json(const nlohmann::json& j) {
    Task task = Task::emotion;
    Preset preset = Preset::desk_scale;
    if (j.is_object() && j.contains("task") && j["task"].is_string()) {
        if (auto t = parse_task(j["task"].get<std::string>())) task = *t;
    }
    if (j.is_object() && j.contains("preset") && j["preset"].is_string()) {
        if (auto p = parse_preset(j["preset"].get<std::string>())) preset = *p;
    }
    return apply_json(preset_config(preset, task), j);
}

} // namespace affect::train
