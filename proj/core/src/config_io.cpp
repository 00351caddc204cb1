#include "autowu/config_io.hpp"

#include "autowu/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>

namespace autowu {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

// Reads fields out of one JSON object, remembering which keys were consumed
// so that leftovers can be reported.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigInvalid(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    std::string field(const std::string& key) const { return join(path_, key); }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out, const std::function<bool(double)>& ok = {},
                const char* range = "") {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number()) throw ConfigInvalid(field(key), "expected a number");
        const double d = v->get<double>();
        if (!std::isfinite(d)) throw ConfigInvalid(field(key), "expected a finite number");
        if (ok && !ok(d)) throw ConfigInvalid(field(key), std::string("must be ") + range);
        out = d;
    }

    template <typename UInt>
    void count(const std::string& key, UInt& out, std::uint64_t min = 0) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number_unsigned()) {
            throw ConfigInvalid(field(key), "expected a non-negative integer");
        }
        const auto u = v->get<std::uint64_t>();
        if (u < min) throw ConfigInvalid(field(key), "must be >= " + std::to_string(min));
        if (u > std::numeric_limits<UInt>::max()) throw ConfigInvalid(field(key), "out of range");
        out = static_cast<UInt>(u);
    }

    void boolean(const std::string& key, bool& out) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_boolean()) throw ConfigInvalid(field(key), "expected true or false");
        out = v->get<bool>();
    }

    template <typename Enum>
    void choice(const std::string& key, Enum& out, Enum (*from_string)(std::string_view)) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_string()) throw ConfigInvalid(field(key), "expected a string");
        try {
            out = from_string(v->get<std::string>());
        } catch (const Error& e) {
            throw ConfigInvalid(field(key), e.what());
        }
    }

    // Calls fn with a Reader over the nested object, if present.
    void object(const std::string& key, const std::function<void(Reader&)>& fn) {
        const json* v = find(key);
        if (!v) return;
        Reader sub(*v, field(key));
        fn(sub);
        sub.finish();
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.contains(key)) throw ConfigInvalid(field(key), "unknown key");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

json parse_text(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid("<root>", std::string("malformed JSON: ") + e.what());
    }
}

const auto positive = [](double d) { return d > 0.0; };
const auto non_negative = [](double d) { return d >= 0.0; };
const auto open_unit = [](double d) { return d > 0.0 && d < 1.0; };
const auto half_open_unit = [](double d) { return d >= 0.0 && d < 1.0; };
const auto closed_unit = [](double d) { return d >= 0.0 && d <= 1.0; };

void read_detector(Reader& r, DetectorConfig& d) {
    r.count("n_test", d.n_test, 1);
    r.number("confidence", d.confidence, open_unit, "in (0, 1)");
    r.count("patience", d.patience, 1);
    r.count("fit_subsample_max", d.fit_subsample_max, 2);
    r.count("infer_subsample_max", d.infer_subsample_max, 1);
    r.count("grid_size", d.grid_size, 2);
}

json detector_json(const DetectorConfig& d) {
    return json{{"confidence", d.confidence},
                {"fit_subsample_max", d.fit_subsample_max},
                {"grid_size", d.grid_size},
                {"infer_subsample_max", d.infer_subsample_max},
                {"n_test", d.n_test},
                {"patience", d.patience}};
}

void read_trajectory(Reader& r, synthgen::TrajectorySpec& s) {
    r.choice("shape", s.shape, synthgen::trajectory_shape_from_string);
    r.count("length", s.length, 2);
    r.number("min_fraction", s.min_fraction, open_unit, "in (0, 1)");
    r.number("noise_rel", s.noise_rel, non_negative, "non-negative");
    r.number("spike_prob", s.spike_prob, closed_unit, "in [0, 1]");
    r.number("spike_magnitude", s.spike_magnitude, non_negative, "non-negative");
    r.count("seed", s.seed);
}

void read_scheduler(Reader& r, train::SchedulerSpec& out) {
    std::string kind = "autowu";
    if (const json* k = r.find("kind")) {
        if (!k->is_string()) throw ConfigInvalid(r.field("kind"), "expected a string");
        kind = k->get<std::string>();
    }
    if (kind == "autowu") {
        AutoWUConfig a;
        r.number("eta_min", a.eta_min, positive, "positive");
        r.number("eta_max", a.eta_max, positive, "positive");
        r.number("rho_w", a.rho_w, open_unit, "in (0, 1)");
        r.choice("decay_shape", a.decay_shape, decay_shape_from_string);
        r.number("tail_fraction", a.tail_fraction, open_unit, "in (0, 1)");
        r.choice("warmup_growth", a.warmup_growth, warmup_growth_from_string);
        r.object("detector", [&](Reader& d) { read_detector(d, a.detector); });
        if (!(a.eta_max > a.eta_min)) throw ConfigInvalid(r.field("eta_max"), "must exceed eta_min");
        out = a;
    } else if (kind == "baseline") {
        BaselineConfig b;
        r.number("eta_base", b.eta_base, positive, "positive");
        r.count("reference_batch", b.reference_batch, 1);
        r.count("warmup_epochs", b.warmup_epochs);
        double peak = 0.0;
        if (r.find("peak_lr")) {
            r.number("peak_lr", peak, positive, "positive");
            b.peak_override = peak;
        }
        out = b;
    } else if (kind == "fixed") {
        train::FixedLR f;
        r.number("lr", f.lr, non_negative, "non-negative");
        out = f;
    } else {
        throw ConfigInvalid(r.field("kind"), "expected autowu, baseline or fixed");
    }
}

json scheduler_json(const train::SchedulerSpec& spec) {
    if (const auto* a = std::get_if<AutoWUConfig>(&spec)) {
        return json{{"decay_shape", to_string(a->decay_shape)},
                    {"detector", detector_json(a->detector)},
                    {"eta_max", a->eta_max},
                    {"eta_min", a->eta_min},
                    {"kind", "autowu"},
                    {"rho_w", a->rho_w},
                    {"tail_fraction", a->tail_fraction},
                    {"warmup_growth", to_string(a->warmup_growth)}};
    }
    if (const auto* b = std::get_if<BaselineConfig>(&spec)) {
        json j{{"eta_base", b->eta_base},
               {"kind", "baseline"},
               {"reference_batch", b->reference_batch},
               {"warmup_epochs", b->warmup_epochs}};
        if (b->peak_override) j["peak_lr"] = *b->peak_override;
        return j;
    }
    return json{{"kind", "fixed"}, {"lr", std::get<train::FixedLR>(spec).lr}};
}

// Cross-field checks live in the validate() methods; their messages start
// with the field path.
template <typename Fn>
void revalidate(Fn&& fn) {
    try {
        fn();
    } catch (const InvalidSpec& e) {
        std::string msg = e.what();
        const auto space = msg.find(' ');
        std::string field = msg.substr(0, space);
        if (!field.empty() && field.back() == ':') field.pop_back();
        throw ConfigInvalid(field, space == std::string::npos ? msg : msg.substr(space + 1));
    }
}

} // namespace

train::ExperimentConfig parse_experiment_config(std::string_view json_text) {
    const json root = parse_text(json_text);
    train::ExperimentConfig cfg;
    Reader r(root, "");

    r.object("dataset", [&](Reader& d) {
        d.choice("kind", cfg.dataset.kind, train::dataset_kind_from_string);
        d.count("n_samples", cfg.dataset.n_samples, 1);
        d.count("n_features", cfg.dataset.n_features, 1);
        d.count("n_classes", cfg.dataset.n_classes, 2);
        d.number("noise", cfg.dataset.noise, non_negative, "non-negative");
        d.count("seed", cfg.dataset.seed);
    });
    r.object("model", [&](Reader& m) {
        m.choice("kind", cfg.model.kind, train::model_kind_from_string);
        m.choice("activation", cfg.model.activation, train::activation_from_string);
        m.count("seed", cfg.model.seed);
        if (const json* h = m.find("hidden_sizes")) {
            if (!h->is_array()) throw ConfigInvalid(m.field("hidden_sizes"), "expected an array");
            cfg.model.hidden_sizes.clear();
            for (const auto& v : *h) {
                if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
                    throw ConfigInvalid(m.field("hidden_sizes"), "expected positive integers");
                }
                cfg.model.hidden_sizes.push_back(v.get<std::size_t>());
            }
        }
        if (cfg.model.kind == train::ModelKind::logistic_regression) cfg.model.hidden_sizes.clear();
    });
    r.object("optimizer", [&](Reader& o) {
        auto kind = cfg.optimizer.kind;
        o.choice("kind", kind, optim::optimizer_kind_from_string);
        cfg.optimizer = optim::OptimizerConfig::defaults(kind);
        o.number("beta1", cfg.optimizer.beta1, half_open_unit, "in [0, 1)");
        o.number("beta2", cfg.optimizer.beta2, half_open_unit, "in [0, 1)");
        o.number("eps", cfg.optimizer.eps, positive, "positive");
        o.number("weight_decay", cfg.optimizer.weight_decay, non_negative, "non-negative");
        o.number("delta", cfg.optimizer.delta, positive, "positive");
        o.number("momentum", cfg.optimizer.momentum, half_open_unit, "in [0, 1)");
        o.number("trust_clip", cfg.optimizer.trust_clip, positive, "positive");
    });
    r.object("scheduler", [&](Reader& s) { read_scheduler(s, cfg.scheduler); });
    r.count("batch_size", cfg.batch_size, 1);
    r.count("epochs", cfg.epochs, 1);
    r.count("seed", cfg.seed);
    r.object("log", [&](Reader& l) { l.boolean("record_timing", cfg.record_timing); });
    r.finish();

    revalidate([&] { cfg.validate(); });
    return cfg;
}

std::string to_json(const train::ExperimentConfig& cfg) {
    json hidden = json::array();
    for (auto h : cfg.model.hidden_sizes) hidden.push_back(h);
    const json j{
        {"batch_size", cfg.batch_size},
        {"dataset",
         {{"kind", train::to_string(cfg.dataset.kind)},
          {"n_classes", cfg.dataset.n_classes},
          {"n_features", cfg.dataset.n_features},
          {"n_samples", cfg.dataset.n_samples},
          {"noise", cfg.dataset.noise},
          {"seed", cfg.dataset.seed}}},
        {"epochs", cfg.epochs},
        {"log", {{"record_timing", cfg.record_timing}}},
        {"model",
         {{"activation", train::to_string(cfg.model.activation)},
          {"hidden_sizes", hidden},
          {"kind", train::to_string(cfg.model.kind)},
          {"seed", cfg.model.seed}}},
        {"optimizer",
         {{"beta1", cfg.optimizer.beta1},
          {"beta2", cfg.optimizer.beta2},
          {"delta", cfg.optimizer.delta},
          {"eps", cfg.optimizer.eps},
          {"kind", optim::to_string(cfg.optimizer.kind)},
          {"momentum", cfg.optimizer.momentum},
          {"trust_clip", cfg.optimizer.trust_clip},
          {"weight_decay", cfg.optimizer.weight_decay}}},
        {"scheduler", scheduler_json(cfg.scheduler)},
        {"seed", cfg.seed},
    };
    return j.dump(2);
}

DetectorConfig parse_detector_config(std::string_view json_text) {
    const json root = parse_text(json_text);
    DetectorConfig cfg;
    Reader r(root, "");
    read_detector(r, cfg);
    r.finish();
    revalidate([&] { cfg.validate(); });
    return cfg;
}

std::string to_json(const DetectorConfig& cfg) {
    return detector_json(cfg).dump(2);
}

synthgen::TrajectorySpec parse_trajectory_spec(std::string_view json_text) {
    const json root = parse_text(json_text);
    synthgen::TrajectorySpec spec;
    Reader r(root, "");
    read_trajectory(r, spec);
    r.finish();
    revalidate([&] { spec.validate(); });
    return spec;
}

std::string to_json(const synthgen::TrajectorySpec& spec) {
    const json j{{"length", spec.length},
                 {"min_fraction", spec.min_fraction},
                 {"noise_rel", spec.noise_rel},
                 {"seed", spec.seed},
                 {"shape", synthgen::to_string(spec.shape)},
                 {"spike_magnitude", spec.spike_magnitude},
                 {"spike_prob", spec.spike_prob}};
    return j.dump(2);
}

} // namespace autowu
