#include "autowu/train.hpp"

#include "autowu/config_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <numeric>
#include <string>

namespace autowu::train {

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::gaussian_blobs: return "gaussian_blobs";
    case DatasetKind::two_moons: return "two_moons";
    case DatasetKind::spiral: return "spiral";
    }
    return "unknown";
}

std::string_view to_string(ModelKind kind) {
    return kind == ModelKind::mlp ? "mlp" : "logistic_regression";
}

std::string_view to_string(Activation act) {
    return act == Activation::relu ? "relu" : "tanh";
}

DatasetKind dataset_kind_from_string(std::string_view name) {
    if (name == "gaussian_blobs") return DatasetKind::gaussian_blobs;
    if (name == "two_moons") return DatasetKind::two_moons;
    if (name == "spiral") return DatasetKind::spiral;
    throw InvalidSpec("unknown dataset kind '" + std::string(name) + "'");
}

ModelKind model_kind_from_string(std::string_view name) {
    if (name == "mlp") return ModelKind::mlp;
    if (name == "logistic_regression") return ModelKind::logistic_regression;
    throw InvalidSpec("unknown model kind '" + std::string(name) + "'");
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw InvalidSpec("unknown activation '" + std::string(name) + "'");
}

void DatasetSpec::validate() const {
    if (n_classes < 2) throw InvalidSpec("dataset.n_classes must be >= 2");
    if (n_classes > n_samples) throw InvalidSpec("dataset.n_classes exceeds dataset.n_samples");
    if (n_features < 1) throw InvalidSpec("dataset.n_features must be >= 1");
    if (!(noise >= 0.0)) throw InvalidSpec("dataset.noise must be non-negative");
    if (kind == DatasetKind::two_moons && (n_classes != 2 || n_features != 2)) {
        throw InvalidSpec("dataset: two_moons requires n_classes = 2 and n_features = 2");
    }
    if (kind == DatasetKind::spiral && n_features != 2) {
        throw InvalidSpec("dataset: spiral requires n_features = 2");
    }
}

namespace {

constexpr double kBlobCenterSpread = 2.0;

} // namespace

Dataset make_dataset(const DatasetSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Dataset d;
    d.n_classes = spec.n_classes;
    d.features = Matrix(spec.n_samples, spec.n_features);
    d.labels.resize(spec.n_samples);
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        d.labels[i] = i % spec.n_classes;
    }

    switch (spec.kind) {
    case DatasetKind::gaussian_blobs: {
        Matrix centers(spec.n_classes, spec.n_features);
        for (double& c : centers.data()) {
            c = kBlobCenterSpread * rng.normal();
        }
        for (std::size_t i = 0; i < spec.n_samples; ++i) {
            const auto center = centers.row(d.labels[i]);
            auto x = d.features.row(i);
            for (std::size_t f = 0; f < spec.n_features; ++f) {
                x[f] = center[f] + spec.noise * rng.normal();
            }
        }
        break;
    }
    case DatasetKind::two_moons: {
        for (std::size_t i = 0; i < spec.n_samples; ++i) {
            const double angle = std::numbers::pi * rng.uniform();
            auto x = d.features.row(i);
            if (d.labels[i] == 0) {
                x[0] = std::cos(angle);
                x[1] = std::sin(angle);
            } else {
                x[0] = 1.0 - std::cos(angle);
                x[1] = 0.5 - std::sin(angle);
            }
            x[0] += spec.noise * rng.normal();
            x[1] += spec.noise * rng.normal();
        }
        break;
    }
    case DatasetKind::spiral: {
        const auto k = static_cast<double>(spec.n_classes);
        for (std::size_t i = 0; i < spec.n_samples; ++i) {
            const double r = rng.uniform();
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(d.labels[i]) / k + 4.0 * r +
                                 spec.noise * rng.normal();
            auto x = d.features.row(i);
            x[0] = r * std::sin(angle);
            x[1] = r * std::cos(angle);
        }
        break;
    }
    }
    return d;
}

Model::Model(const ModelSpec& spec, std::size_t n_features, std::size_t n_classes)
    : activation_(spec.activation) {
    sizes_.push_back(n_features);
    if (spec.kind == ModelKind::mlp) {
        for (std::size_t h : spec.hidden_sizes) {
            if (h == 0) {
                throw InvalidSpec("model.hidden_sizes entries must be positive");
            }
            sizes_.push_back(h);
        }
    }
    sizes_.push_back(n_classes);

    Rng rng(spec.seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const std::size_t fan_in = sizes_[l];
        const std::size_t fan_out = sizes_[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(fan_in * fan_out);
        for (double& v : w) {
            v = bound * (2.0 * rng.uniform() - 1.0);
        }
        const std::string prefix = "layer" + std::to_string(l);
        params_.emplace_back(std::move(w), prefix + ".weight", true);
        params_.emplace_back(std::vector<double>(fan_out, 0.0), prefix + ".bias", false);
    }
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += p.size();
    }
    return n;
}

namespace {

double activate(Activation act, double z) {
    return act == Activation::relu ? std::max(z, 0.0) : std::tanh(z);
}

double activate_grad(Activation act, double z) {
    if (act == Activation::relu) {
        return z > 0.0 ? 1.0 : 0.0;
    }
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

// Pre-activations of every layer for the given rows; the last entry holds
// the logits.
std::vector<Matrix> forward(const Model& model, const Dataset& data, std::span<const std::size_t> rows) {
    const auto sizes = model.layer_sizes();
    const auto& params = model.params();
    std::vector<Matrix> pre;
    pre.reserve(model.n_layers());

    Matrix input(rows.size(), sizes[0]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = data.features.row(rows[r]);
        std::copy(src.begin(), src.end(), input.row(r).begin());
    }

    const Matrix* a = &input;
    Matrix hidden;
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const auto& w = params[2 * l].values;
        const auto& b = params[2 * l + 1].values;
        Matrix z(rows.size(), out);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto ar = a->row(r);
            auto zr = z.row(r);
            for (std::size_t o = 0; o < out; ++o) {
                const double* wo = w.data() + o * in;
                double s = b[o];
                for (std::size_t i = 0; i < in; ++i) {
                    s += wo[i] * ar[i];
                }
                zr[o] = s;
            }
        }
        pre.push_back(std::move(z));
        if (l + 1 < model.n_layers()) {
            hidden = pre.back();
            for (double& v : hidden.data()) {
                v = activate(model.activation(), v);
            }
            a = &hidden;
        }
    }
    return pre;
}

} // namespace

LossAndGrad forward_backward(const Model& model, const Dataset& data, std::span<const std::size_t> batch) {
    if (batch.empty()) {
        throw PreconditionError("forward_backward: empty batch");
    }
    const auto sizes = model.layer_sizes();
    const auto& params = model.params();
    const std::size_t m = batch.size();
    const std::size_t layers = model.n_layers();
    const auto pre = forward(model, data, batch);

    // Softmax cross-entropy; dz holds d loss / d logits.
    const Matrix& logits = pre.back();
    Matrix dz(m, sizes.back());
    double loss = 0.0;
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) {
        const auto z = logits.row(r);
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) {
            denom += std::exp(v - zmax);
        }
        const double lse = zmax + std::log(denom);
        const std::size_t label = data.labels[batch[r]];
        loss += lse - z[label];
        auto g = dz.row(r);
        for (std::size_t c = 0; c < z.size(); ++c) {
            g[c] = std::exp(z[c] - lse) * inv_m;
        }
        g[label] -= inv_m;
    }
    loss *= inv_m;
    if (!std::isfinite(loss)) {
        throw NonFiniteLoss("forward_backward: non-finite loss");
    }

    LossAndGrad out;
    out.loss = loss;
    out.grads.resize(params.size());

    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = sizes[l];
        const std::size_t outs = sizes[l + 1];
        auto& gw = out.grads[2 * l];
        auto& gb = out.grads[2 * l + 1];
        gw.assign(in * outs, 0.0);
        gb.assign(outs, 0.0);

        // Input activations of layer l.
        for (std::size_t r = 0; r < m; ++r) {
            const auto dzr = dz.row(r);
            for (std::size_t o = 0; o < outs; ++o) {
                const double d = dzr[o];
                gb[o] += d;
                if (d == 0.0) {
                    continue;
                }
                double* gwo = gw.data() + o * in;
                if (l == 0) {
                    const auto x = data.features.row(batch[r]);
                    for (std::size_t i = 0; i < in; ++i) {
                        gwo[i] += d * x[i];
                    }
                } else {
                    const auto zprev = pre[l - 1].row(r);
                    for (std::size_t i = 0; i < in; ++i) {
                        gwo[i] += d * activate(model.activation(), zprev[i]);
                    }
                }
            }
        }

        if (l == 0) {
            break;
        }
        const auto& w = params[2 * l].values;
        Matrix dprev(m, in);
        for (std::size_t r = 0; r < m; ++r) {
            const auto dzr = dz.row(r);
            auto dp = dprev.row(r);
            for (std::size_t o = 0; o < outs; ++o) {
                const double d = dzr[o];
                if (d == 0.0) {
                    continue;
                }
                const double* wo = w.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) {
                    dp[i] += d * wo[i];
                }
            }
            const auto zprev = pre[l - 1].row(r);
            for (std::size_t i = 0; i < in; ++i) {
                dp[i] *= activate_grad(model.activation(), zprev[i]);
            }
        }
        dz = std::move(dprev);
    }
    return out;
}

Evaluation evaluate(const Model& model, const Dataset& data) {
    constexpr std::size_t kChunk = 1024;
    Evaluation ev;
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
        const std::size_t end = std::min(data.size(), start + kChunk);
        rows.resize(end - start);
        std::iota(rows.begin(), rows.end(), start);
        const auto pre = forward(model, data, rows);
        const Matrix& logits = pre.back();
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto z = logits.row(r);
            const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
            const double zmax = z[best];
            double denom = 0.0;
            for (double v : z) {
                denom += std::exp(v - zmax);
            }
            const std::size_t label = data.labels[rows[r]];
            ev.loss += zmax + std::log(denom) - z[label];
            ev.accuracy += best == label ? 1.0 : 0.0;
        }
    }
    const auto n = static_cast<double>(data.size());
    ev.loss /= n;
    ev.accuracy /= n;
    return ev;
}

std::size_t ExperimentConfig::steps_per_epoch() const {
    return (dataset.n_samples + batch_size - 1) / batch_size;
}

std::size_t ExperimentConfig::total_steps() const {
    return epochs * steps_per_epoch();
}

void ExperimentConfig::validate() const {
    dataset.validate();
    optimizer.validate();
    if (batch_size == 0) throw InvalidSpec("batch_size must be positive");
    if (dataset.n_samples < batch_size) throw InvalidSpec("dataset.n_samples must be >= batch_size");
    if (epochs == 0) throw InvalidSpec("epochs must be positive");
    if (model.kind == ModelKind::mlp && model.hidden_sizes.empty()) {
        throw InvalidSpec("model.hidden_sizes must be non-empty for an mlp");
    }
    if (const auto* a = std::get_if<AutoWUConfig>(&scheduler)) {
        AutoWUConfig c = *a;
        c.total_steps = total_steps();
        c.validate();
    } else if (const auto* b = std::get_if<BaselineConfig>(&scheduler)) {
        BaselineConfig c = *b;
        c.total_steps = total_steps();
        c.steps_per_epoch = steps_per_epoch();
        c.batch_size = batch_size;
        c.validate();
    } else if (const auto* f = std::get_if<FixedLR>(&scheduler)) {
        if (!(f->lr >= 0.0)) throw InvalidSpec("scheduler.lr must be non-negative");
    }
}

namespace {

// Uniform view over the three scheduler kinds used by the training loop.
class LrSource {
public:
    LrSource(const ExperimentConfig& cfg) : spec_(cfg.scheduler) {
        if (auto* a = std::get_if<AutoWUConfig>(&spec_)) {
            a->total_steps = cfg.total_steps();
            autowu_.emplace(*a, mix_seed(cfg.seed, 0x5eed'de7ec7ULL));
        } else if (auto* b = std::get_if<BaselineConfig>(&spec_)) {
            b->total_steps = cfg.total_steps();
            b->steps_per_epoch = cfg.steps_per_epoch();
            b->batch_size = cfg.batch_size;
        }
    }

    double lr(std::size_t t) const {
        if (autowu_) return autowu_->current_lr();
        if (const auto* b = std::get_if<BaselineConfig>(&spec_)) return baseline_lr(t, *b);
        return std::get<FixedLR>(spec_).lr;
    }

    std::string phase(std::size_t t) const {
        if (autowu_) return std::string(to_string(autowu_->state().phase));
        if (const auto* b = std::get_if<BaselineConfig>(&spec_)) {
            return t < b->warmup_steps() ? "warmup" : "decay";
        }
        return "constant";
    }

    std::optional<StepEvent> observe(double loss, bool epoch_end) {
        if (!autowu_) return std::nullopt;
        return autowu_->step(loss, epoch_end);
    }

    const AutoWUScheduler* autowu() const { return autowu_ ? &*autowu_ : nullptr; }

    std::size_t p_min_columns() const {
        const auto* a = std::get_if<AutoWUConfig>(&spec_);
        return a ? a->detector.n_test : 0;
    }

    std::string kind() const {
        if (std::holds_alternative<AutoWUConfig>(spec_)) return "autowu";
        if (std::holds_alternative<BaselineConfig>(spec_)) return "baseline";
        return "fixed";
    }

private:
    SchedulerSpec spec_;
    std::optional<AutoWUScheduler> autowu_;
};

} // namespace

ExperimentLog run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Dataset data = make_dataset(cfg.dataset);
    Model model(cfg.model, data.n_features(), data.n_classes);
    LrSource schedule(cfg);

    ExperimentLog log;
    log.total_steps = cfg.total_steps();
    log.config_json = to_json(cfg);
    log.config_hash = fnv1a_hex(log.config_json);
    log.scheduler_kind = schedule.kind();
    log.p_min_columns = schedule.p_min_columns();
    log.steps.reserve(log.total_steps);

    Rng sampler(mix_seed(cfg.seed, 1));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const std::size_t per_epoch = cfg.steps_per_epoch();
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto epoch_started = std::chrono::steady_clock::now();
        shuffle(sampler, order);
        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t b = 0; b < per_epoch; ++b, ++t) {
            const std::size_t begin = b * cfg.batch_size;
            const std::size_t end = std::min(data.size(), begin + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + begin, end - begin);
            const double lr = schedule.lr(t);
            const std::string phase = schedule.phase(t);

            LossAndGrad fb;
            try {
                fb = forward_backward(model, data, batch);
            } catch (const NonFiniteLoss& e) {
                log.steps.push_back({t, epoch, lr, std::numeric_limits<double>::quiet_NaN(), phase});
                log.status = "diverged";
                log.abort_reason = "non-finite loss at step " + std::to_string(t);
                throw RunAborted(log.abort_reason, std::move(log));
            }
            for (std::size_t g = 0; g < model.params().size(); ++g) {
                optim::optimizer_step(model.params()[g], fb.grads[g], lr, cfg.optimizer);
            }
            log.steps.push_back({t, epoch, lr, fb.loss, phase});

            const bool epoch_end = b + 1 == per_epoch;
            if (auto event = schedule.observe(fb.loss, epoch_end)) {
                if (event->outcome) {
                    rec.detected = event->outcome->detected;
                    rec.patience_flag = event->decision ? event->decision->patience_flag : 0;
                    rec.p_min = event->outcome->p_min_values;
                    log.gp_test_ms.push_back(event->gp_test_ms);
                    if (cfg.record_timing) {
                        rec.gp_test_ms = event->gp_test_ms;
                    }
                }
                if (event->switched) {
                    const auto& st = schedule.autowu()->state();
                    log.switch_info = SwitchInfo{*st.switch_step, *st.t_star, *st.decay_start_lr, st.forced_switch};
                }
            }
        }

        const Evaluation ev = evaluate(model, data);
        rec.eval_loss = ev.loss;
        rec.eval_acc = ev.accuracy;
        if (log.switch_info) {
            rec.t_star = log.switch_info->t_star;
        }
        log.epochs.push_back(rec);
        log.epoch_wall_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch_started).count());
        if (!std::isfinite(ev.loss)) {
            log.status = "diverged";
            log.abort_reason = "non-finite evaluation loss after epoch " + std::to_string(epoch);
            throw RunAborted(log.abort_reason, std::move(log));
        }
    }
    return log;
}

} // namespace autowu::train
