#include "snnadv/ann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snnadv {

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (learning_rate <= 0.0) throw ConfigError("learning-rate must be positive");
    if (batch_size <= 0) throw ConfigError("batch-size must be positive");
    for (std::size_t i = 0; i < anneal_epochs.size(); ++i) {
        if (anneal_epochs[i] >= epochs) throw ConfigError("anneal-epochs must be < epochs");
        if (i > 0 && anneal_epochs[i] <= anneal_epochs[i - 1]) {
            throw ConfigError("anneal-epochs must be strictly increasing");
        }
    }
}

Shape AnnModel::output_shape() const {
    Shape s = input_shape;
    for (const auto& l : layers) s = layer_output_shape(l, s);
    return s;
}

int AnnModel::num_classes() const {
    const Shape out = output_shape();
    if (out.size() != 1) throw ShapeError("model output is not a logits vector: " + shape_to_string(out));
    return static_cast<int>(out[0]);
}

bool AnnModel::has_dropout() const {
    return std::any_of(layers.begin(), layers.end(),
                       [](const LayerSpec& l) { return l.kind == LayerKind::Dropout; });
}

AnnModel make_ann(Shape input_shape, std::vector<LayerSpec> layers) {
    if (layers.empty()) throw ConfigError("model needs at least one layer");
    AnnModel m;
    m.input_shape = std::move(input_shape);
    m.layers = std::move(layers);
    Shape s = m.input_shape;
    for (const auto& l : m.layers) {
        const Shape ws = layer_weight_shape(l, s);
        m.weights.emplace_back(ws.empty() ? Tensor() : Tensor(ws));
        const Shape bs = layer_bias_shape(l);
        m.biases.emplace_back(bs.empty() ? Tensor() : Tensor(bs));
        s = layer_output_shape(l, s);  // throws on an inconsistent chain
    }
    if (s.size() != 1) {
        throw ShapeError("model must end in a logits vector, got " + shape_to_string(s));
    }
    return m;
}

void init_weights(AnnModel& model, SeededRng& rng) {
    fanin_uniform_init(model.weights, rng);
    // biases stay zero
}

namespace {

// Dropout keep-mask with inverted scaling, one value per element.
Tensor dropout_mask(const Shape& shape, double rate, SeededRng& rng) {
    Tensor m(shape);
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = rng.next_uniform() >= rate ? scale : 0.0;
    }
    return m;
}

struct ForwardTrace {
    std::vector<Tensor> inputs;   // activation entering each layer
    std::vector<Tensor> masks;    // dropout masks (train mode), empty elsewhere
    Tensor logits;
};

ForwardTrace run_forward(const AnnModel& model, const Tensor& x, Mode mode, SeededRng* rng) {
    if (x.shape() != model.input_shape) {
        throw ShapeError("input shape " + shape_to_string(x.shape()) + " does not match model input " +
                         shape_to_string(model.input_shape));
    }
    if (mode == Mode::Train && model.has_dropout() && rng == nullptr) {
        throw ConfigError("train-mode forward with dropout requires an rng");
    }
    ForwardTrace tr;
    tr.inputs.reserve(model.layers.size());
    tr.masks.resize(model.layers.size());
    Tensor cur = x;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& l = model.layers[i];
        tr.inputs.push_back(cur);
        switch (l.kind) {
            case LayerKind::Conv2d:
                cur = conv2d_forward(model.weights[i], model.biases[i], cur);
                break;
            case LayerKind::Dense:
                cur = dense_forward(model.weights[i], model.biases[i], cur);
                break;
            case LayerKind::AvgPool:
                cur = avgpool_forward(cur, l.window);
                break;
            case LayerKind::Relu:
                cur = relu_forward(cur);
                break;
            case LayerKind::Dropout:
                if (mode == Mode::Train && l.rate > 0.0) {
                    tr.masks[i] = dropout_mask(cur.shape(), l.rate, *rng);
                    cur = mul(cur, tr.masks[i]);
                }
                break;
            case LayerKind::Flatten:
                cur = cur.reshaped({cur.size()});
                break;
        }
    }
    tr.logits = std::move(cur);
    return tr;
}

}  // namespace

Tensor ann_forward(const AnnModel& model, const Tensor& x, Mode mode, SeededRng* rng) {
    return run_forward(model, x, mode, rng).logits;
}

Tensor softmax(const Tensor& logits) {
    Tensor p(logits.shape());
    double m = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) m = std::max(m, logits[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] /= z;
    return p;
}

double softmax_cross_entropy(const Tensor& logits, int label, Tensor* dlogits) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw ValueError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " classes");
    }
    double m = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) m = std::max(m, logits[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) z += std::exp(logits[i] - m);
    const double log_z = std::log(z) + m;
    const double loss = log_z - logits[static_cast<std::size_t>(label)];
    if (dlogits) {
        *dlogits = Tensor(logits.shape());
        for (std::size_t i = 0; i < logits.size(); ++i) {
            (*dlogits)[i] = std::exp(logits[i] - log_z);
        }
        (*dlogits)[static_cast<std::size_t>(label)] -= 1.0;
    }
    return loss;
}

Gradients loss_and_grads(const AnnModel& model, const Tensor& x, int label, Mode mode, SeededRng* rng) {
    ForwardTrace tr = run_forward(model, x, mode, rng);

    Gradients g;
    g.weights.resize(model.layers.size());
    g.biases.resize(model.layers.size());

    Tensor delta;
    g.loss = softmax_cross_entropy(tr.logits, label, &delta);

    for (std::size_t n = model.layers.size(); n-- > 0;) {
        const LayerSpec& l = model.layers[n];
        const Tensor& in = tr.inputs[n];
        switch (l.kind) {
            case LayerKind::Conv2d: {
                Tensor dk, db, dx;
                conv2d_backward(model.weights[n], in, delta, dk, db, dx);
                g.weights[n] = std::move(dk);
                g.biases[n] = std::move(db);
                delta = std::move(dx);
                break;
            }
            case LayerKind::Dense: {
                Tensor dw, db, dx;
                dense_backward(model.weights[n], in, delta, dw, db, dx);
                g.weights[n] = std::move(dw);
                g.biases[n] = std::move(db);
                delta = std::move(dx);
                break;
            }
            case LayerKind::AvgPool:
                delta = avgpool_backward(delta, l.window, in.shape());
                break;
            case LayerKind::Relu:
                delta = relu_backward(in, delta);
                break;
            case LayerKind::Dropout:
                if (!tr.masks[n].empty()) delta = mul(delta, tr.masks[n]);
                break;
            case LayerKind::Flatten:
                delta = delta.reshaped(in.shape());
                break;
        }
    }
    g.input = std::move(delta);
    return g;
}

AnnModel train_ann(AnnModel model, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ValueError("training dataset is empty");
    const int classes = model.num_classes();
    for (const Sample& s : data.items) {
        if (s.label < 0 || s.label >= classes) {
            throw ValueError("label " + std::to_string(s.label) + " out of range for " +
                             std::to_string(classes) + " classes");
        }
    }

    SeededRng root(cfg.seed, 0x7261696eull);  // training stream family
    double lr = cfg.learning_rate;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (std::find(cfg.anneal_epochs.begin(), cfg.anneal_epochs.end(), epoch) !=
            cfg.anneal_epochs.end()) {
            lr /= 10.0;
        }
        SeededRng epoch_rng = root.child(static_cast<std::uint64_t>(epoch));
        // Fisher-Yates with the epoch stream
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(epoch_rng.next_below(i));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch_end = std::min(pos + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double batch_n = static_cast<double>(batch_end - pos);
            std::vector<Tensor> acc_w(model.layers.size()), acc_b(model.layers.size());
            for (; pos < batch_end; ++pos) {
                const Sample& s = data.items[order[pos]];
                SeededRng drop_rng = epoch_rng.child(order[pos] + 1);
                Gradients g = loss_and_grads(model, s.x, s.label, Mode::Train, &drop_rng);
                epoch_loss += g.loss;
                for (std::size_t i = 0; i < model.layers.size(); ++i) {
                    if (g.weights[i].empty()) continue;
                    if (acc_w[i].empty()) {
                        acc_w[i] = std::move(g.weights[i]);
                        acc_b[i] = std::move(g.biases[i]);
                    } else {
                        for (std::size_t j = 0; j < acc_w[i].size(); ++j) acc_w[i][j] += g.weights[i][j];
                        for (std::size_t j = 0; j < acc_b[i].size(); ++j) acc_b[i][j] += g.biases[i][j];
                    }
                }
            }
            const double step = lr / batch_n;
            for (std::size_t i = 0; i < model.layers.size(); ++i) {
                if (acc_w[i].empty()) continue;
                for (std::size_t j = 0; j < acc_w[i].size(); ++j) model.weights[i][j] -= step * acc_w[i][j];
                if (model.use_bias) {
                    for (std::size_t j = 0; j < acc_b[i].size(); ++j) model.biases[i][j] -= step * acc_b[i][j];
                }
            }
        }
        epoch_loss /= static_cast<double>(data.size());
        if (!std::isfinite(epoch_loss)) {
            throw TrainingDivergedError(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                                   " (loss is not finite)");
        }
        if (cfg.log) cfg.log(epoch, epoch_loss);
    }
    return model;
}

double accuracy(const AnnModel& model, const Dataset& data) {
    if (data.empty()) throw ValueError("accuracy of an empty dataset");
    std::size_t hits = 0;
    for (const Sample& s : data.items) {
        const Tensor logits = ann_forward(model, s.x, Mode::Eval);
        if (static_cast<int>(argmax(logits)) == s.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace snnadv
