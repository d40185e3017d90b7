#include "snnadv/snn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace snnadv {

void NeuronParams::validate() const {
    if (v_th <= 0.0) throw ConfigError("neuron threshold must be positive");
    if (leak == LeakMode::Exponential && tau <= 0.0) {
        throw ConfigError("leak time constant must be positive");
    }
}

double NeuronParams::decay() const {
    return leak == LeakMode::Exponential ? std::exp(-1.0 / tau) : 1.0;
}

std::vector<std::size_t> SnnModel::spiking_layer_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::Relu) out.push_back(i);
    }
    return out;
}

int SnnModel::num_classes() const {
    Shape s = input_shape;
    for (const auto& l : layers) s = layer_output_shape(l, s);
    return static_cast<int>(s[0]);
}

SnnModel make_snn(Shape input_shape, std::vector<LayerSpec> layers, const NeuronParams& shared,
                  int horizon, Provenance provenance) {
    if (horizon < 1) throw ConfigError("horizon T must be >= 1");
    shared.validate();
    if (layers.empty()) throw ConfigError("model needs at least one layer");
    if (layers.back().kind != LayerKind::Dense) {
        throw ConfigError("spiking model must end in a dense output layer");
    }
    // every weighted layer except the output is followed by a spiking slot
    // before the next weighted layer
    int pending_weighted = 0;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        if (layers[i].has_weights()) {
            if (pending_weighted) {
                throw ConfigError("consecutive weighted layers without a spiking nonlinearity at " +
                                  std::to_string(i));
            }
            pending_weighted = 1;
        } else if (layers[i].kind == LayerKind::Relu) {
            pending_weighted = 0;
        }
    }
    if (pending_weighted) {
        throw ConfigError("hidden weighted layer must be followed by a spiking nonlinearity");
    }

    SnnModel m;
    m.input_shape = std::move(input_shape);
    m.layers = std::move(layers);
    m.horizon = horizon;
    m.provenance = provenance;
    Shape s = m.input_shape;
    for (const auto& l : m.layers) {
        const Shape ws = layer_weight_shape(l, s);
        m.weights.emplace_back(ws.empty() ? Tensor() : Tensor(ws));
        const Shape bs = layer_bias_shape(l);
        m.biases.emplace_back(bs.empty() ? Tensor() : Tensor(bs));  // stays zero
        m.neuron_params.push_back(shared);
        s = layer_output_shape(l, s);
    }
    if (s.size() != 1) throw ConfigError("spiking model must produce a score vector");
    return m;
}

void init_weights(SnnModel& model, SeededRng& rng) {
    fanin_uniform_init(model.weights, rng);
}

Tensor SpikeTrain::step(int t) const {
    const std::size_t n = shape_numel(pixel_shape);
    Tensor out(pixel_shape);
    std::memcpy(out.data(), events.data() + static_cast<std::size_t>(t) * n, n * sizeof(double));
    return out;
}

SpikeTrain poisson_encode(const Tensor& x, int T, SeededRng& rng) {
    if (T < 1) throw ConfigError("encoding horizon T must be >= 1");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::fabs(x[i]) > 1.0) {
            throw ValueError("encoding range: |x| must be <= 1, got " + std::to_string(x[i]));
        }
    }
    SpikeTrain train;
    train.T = T;
    train.seed = rng.seed();
    train.pixel_shape = x.shape();
    Shape ev_shape;
    ev_shape.push_back(static_cast<std::size_t>(T));
    for (std::size_t e : x.shape()) ev_shape.push_back(e);
    train.events = Tensor(ev_shape);
    const std::size_t n = x.size();
    for (int t = 0; t < T; ++t) {
        double* row = train.events.data() + static_cast<std::size_t>(t) * n;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::fabs(x[i]);
            if (rng.next_uniform() < p) row[i] = x[i] > 0.0 ? 1.0 : -1.0;
        }
    }
    return train;
}

Tensor rate_decode(const SpikeTrain& train) {
    const std::size_t n = shape_numel(train.pixel_shape);
    Tensor out(train.pixel_shape);
    for (int t = 0; t < train.T; ++t) {
        const double* row = train.events.data() + static_cast<std::size_t>(t) * n;
        for (std::size_t i = 0; i < n; ++i) out[i] += row[i];
    }
    const double inv = 1.0 / static_cast<double>(train.T);
    for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
    return out;
}

Tensor neuron_step(NeuronState& state, const Tensor& input_current, const NeuronParams& p) {
    check_same_shape(state.v_mem, input_current, "neuron_step");
    const double lambda = p.decay();
    Tensor spikes(input_current.shape());
    double* v = state.v_mem.data();
    for (std::size_t i = 0; i < input_current.size(); ++i) {
        v[i] = lambda * v[i] + input_current[i];
        if (v[i] >= p.v_th) {
            spikes[i] = 1.0;
            v[i] = p.reset == ResetMode::ToZero ? 0.0 : v[i] - p.v_th;
        }
    }
    return spikes;
}

Tensor snn_forward(const SnnModel& model, const SpikeTrain& train, const SimHooks* hooks) {
    if (train.T != model.horizon) {
        throw ConfigError("spike train horizon " + std::to_string(train.T) +
                          " does not match model horizon " + std::to_string(model.horizon));
    }
    if (train.pixel_shape != model.input_shape) {
        throw ShapeError("spike train shape " + shape_to_string(train.pixel_shape) +
                         " does not match model input " + shape_to_string(model.input_shape));
    }

    const std::size_t n_layers = model.layers.size();
    std::vector<NeuronState> states(n_layers);
    {
        Shape s = model.input_shape;
        for (std::size_t i = 0; i < n_layers; ++i) {
            if (model.layers[i].kind == LayerKind::Relu) states[i].v_mem = Tensor(s);
            s = layer_output_shape(model.layers[i], s);
        }
    }

    Tensor scores({static_cast<std::size_t>(model.num_classes())});
    for (int t = 0; t < train.T; ++t) {
        Tensor z = train.step(t);
        for (std::size_t i = 0; i < n_layers; ++i) {
            const LayerSpec& l = model.layers[i];
            switch (l.kind) {
                case LayerKind::Conv2d:
                    z = conv2d_forward(model.weights[i], Tensor(), z);
                    break;
                case LayerKind::Dense:
                    z = dense_forward(model.weights[i], Tensor(), z);
                    break;
                case LayerKind::AvgPool:
                    z = avgpool_forward(z, l.window);
                    break;
                case LayerKind::Relu:
                    if (hooks && hooks->on_current) hooks->on_current(i, t, z);
                    z = neuron_step(states[i], z, model.neuron_params[i]);
                    if (hooks && hooks->on_spikes) hooks->on_spikes(i, t, z);
                    break;
                case LayerKind::Dropout:
                    if (hooks && hooks->dropout_masks && !(*hooks->dropout_masks)[i].empty()) {
                        z = mul(z, (*hooks->dropout_masks)[i]);
                    }
                    break;
                case LayerKind::Flatten:
                    z = z.reshaped({z.size()});
                    break;
            }
        }
        // the final dense layer accumulates without firing or leaking
        for (std::size_t i = 0; i < scores.size(); ++i) scores[i] += z[i];
    }
    return scores;
}

Tensor trace_step(const Tensor& prev, const Tensor& spikes, double tau, int T) {
    check_same_shape(prev, spikes, "trace_step");
    const double lambda = std::exp(-1.0 / tau);
    const double invT = 1.0 / static_cast<double>(T);
    Tensor out(prev.shape());
    for (std::size_t i = 0; i < prev.size(); ++i) out[i] = prev[i] * lambda + spikes[i] * invT;
    return out;
}

Tensor activation_trace(const Tensor& spikes, double tau, int T) {
    if (spikes.rank() < 1 || spikes.extent(0) != static_cast<std::size_t>(T)) {
        throw ShapeError("spike raster must have T rows, got " + shape_to_string(spikes.shape()));
    }
    const std::size_t n = spikes.size() / static_cast<std::size_t>(T);
    const double lambda = std::exp(-1.0 / tau);
    const double invT = 1.0 / static_cast<double>(T);
    Tensor trace(spikes.shape());
    for (int t = 0; t < T; ++t) {
        const double* srow = spikes.data() + static_cast<std::size_t>(t) * n;
        double* arow = trace.data() + static_cast<std::size_t>(t) * n;
        const double* prev = t > 0 ? trace.data() + static_cast<std::size_t>(t - 1) * n : nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            arow[i] = (prev ? prev[i] * lambda : 0.0) + srow[i] * invT;
        }
    }
    return trace;
}

Tensor surrogate_grad(const Tensor& trace_series, const NeuronParams& p, int t) {
    const int T = static_cast<int>(trace_series.extent(0));
    if (t < 1 || t > T) throw ValueError("surrogate time index out of range");
    const std::size_t n = trace_series.size() / static_cast<std::size_t>(T);
    const double* cur = trace_series.data() + static_cast<std::size_t>(t - 1) * n;
    const double* prev = t >= 2 ? trace_series.data() + static_cast<std::size_t>(t - 2) * n : nullptr;
    Shape s(trace_series.shape().begin() + 1, trace_series.shape().end());
    Tensor g(s);
    for (std::size_t i = 0; i < n; ++i) {
        const double da = cur[i] - (prev ? prev[i] : 0.0);
        g[i] = std::max(0.0, (1.0 + da) / p.v_th);
    }
    return g;
}

namespace {

// Per-sample record of everything the trace-based backward pass needs.
struct SpikeForwardRecord {
    double loss = 0.0;
    Tensor dscores;                       // softmax(scores) - onehot
    std::vector<Tensor> input_traces;     // per weighted layer: trace of its input signal
    std::vector<Tensor> surrogates;       // per Relu slot: surrogate derivative at T
    std::vector<Tensor> dropout_masks;    // per layer (fixed across the horizon)
};

// Simulates one encoded sample while maintaining, incrementally: the trace
// of every weighted layer's input signal and the last two trace values of
// every spiking slot's output spikes.
SpikeForwardRecord spike_forward(const SnnModel& model, const SpikeTrain& train, int label,
                                 SeededRng* dropout_rng) {
    const std::size_t n_layers = model.layers.size();
    const int T = model.horizon;

    // tau used for a layer input's trace: the nearest spiking slot's tau
    std::vector<double> input_tau(n_layers, 0.0);
    {
        // plain rate (no decay) when the model has no spiking slot at all
        double first_tau = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_layers; ++i) {
            if (model.layers[i].kind == LayerKind::Relu) {
                first_tau = model.neuron_params[i].tau;
                break;
            }
        }
        double cur_tau = first_tau;
        for (std::size_t i = 0; i < n_layers; ++i) {
            input_tau[i] = cur_tau;
            if (model.layers[i].kind == LayerKind::Relu) cur_tau = model.neuron_params[i].tau;
        }
    }

    SpikeForwardRecord rec;
    rec.input_traces.assign(n_layers, Tensor());
    rec.surrogates.assign(n_layers, Tensor());
    rec.dropout_masks.assign(n_layers, Tensor());

    // dropout: one fixed mask per sample, held constant across all T steps
    {
        Shape s = model.input_shape;
        for (std::size_t i = 0; i < n_layers; ++i) {
            const LayerSpec& l = model.layers[i];
            if (l.kind == LayerKind::Dropout && l.rate > 0.0 && dropout_rng) {
                Tensor m(s);
                const double scale = 1.0 / (1.0 - l.rate);
                for (std::size_t j = 0; j < m.size(); ++j) {
                    m[j] = dropout_rng->next_uniform() >= l.rate ? scale : 0.0;
                }
                rec.dropout_masks[i] = std::move(m);
            }
            s = layer_output_shape(l, s);
        }
    }

    std::vector<NeuronState> states(n_layers);
    std::vector<Tensor> slot_trace_prev(n_layers), slot_trace_cur(n_layers);
    {
        Shape s = model.input_shape;
        for (std::size_t i = 0; i < n_layers; ++i) {
            if (model.layers[i].kind == LayerKind::Relu) {
                states[i].v_mem = Tensor(s);
                slot_trace_cur[i] = Tensor(s);
            }
            s = layer_output_shape(model.layers[i], s);
        }
    }

    Tensor scores({static_cast<std::size_t>(model.num_classes())});
    for (int t = 0; t < T; ++t) {
        Tensor z = train.step(t);
        for (std::size_t i = 0; i < n_layers; ++i) {
            const LayerSpec& l = model.layers[i];
            if (l.has_weights()) {
                if (rec.input_traces[i].empty()) rec.input_traces[i] = Tensor(z.shape());
                rec.input_traces[i] = trace_step(rec.input_traces[i], z, input_tau[i], T);
            }
            switch (l.kind) {
                case LayerKind::Conv2d:
                    z = conv2d_forward(model.weights[i], Tensor(), z);
                    break;
                case LayerKind::Dense:
                    z = dense_forward(model.weights[i], Tensor(), z);
                    break;
                case LayerKind::AvgPool:
                    z = avgpool_forward(z, l.window);
                    break;
                case LayerKind::Relu: {
                    z = neuron_step(states[i], z, model.neuron_params[i]);
                    slot_trace_prev[i] = slot_trace_cur[i];
                    slot_trace_cur[i] = trace_step(slot_trace_cur[i], z, model.neuron_params[i].tau, T);
                    break;
                }
                case LayerKind::Dropout:
                    if (!rec.dropout_masks[i].empty()) z = mul(z, rec.dropout_masks[i]);
                    break;
                case LayerKind::Flatten:
                    z = z.reshaped({z.size()});
                    break;
            }
        }
        for (std::size_t i = 0; i < scores.size(); ++i) scores[i] += z[i];
    }

    rec.loss = softmax_cross_entropy(scores, label, &rec.dscores);
    for (std::size_t i = 0; i < n_layers; ++i) {
        if (model.layers[i].kind != LayerKind::Relu) continue;
        const NeuronParams& p = model.neuron_params[i];
        Tensor g(slot_trace_cur[i].shape());
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double da = slot_trace_cur[i][j] - slot_trace_prev[i][j];
            g[j] = std::max(0.0, (1.0 + da) / p.v_th);
        }
        rec.surrogates[i] = std::move(g);
    }
    return rec;
}

// Backward pass over the layer chain, treating the recorded traces as the
// layer activations and the surrogate as the spike derivative. Returns
// per-layer weight gradients (biases stay frozen at zero).
std::vector<Tensor> spike_backward(const SnnModel& model, const SpikeForwardRecord& rec) {
    const std::size_t n_layers = model.layers.size();
    std::vector<Tensor> grads(n_layers);
    Tensor delta = rec.dscores;
    for (std::size_t n = n_layers; n-- > 0;) {
        const LayerSpec& l = model.layers[n];
        switch (l.kind) {
            case LayerKind::Dense: {
                Tensor dw, db, dx;
                dense_backward(model.weights[n], rec.input_traces[n], delta, dw, db, dx);
                grads[n] = std::move(dw);
                delta = std::move(dx);
                break;
            }
            case LayerKind::Conv2d: {
                Tensor dk, db, dx;
                conv2d_backward(model.weights[n], rec.input_traces[n], delta, dk, db, dx);
                grads[n] = std::move(dk);
                delta = std::move(dx);
                break;
            }
            case LayerKind::AvgPool: {
                Shape in_shape = delta.shape();
                in_shape[1] *= static_cast<std::size_t>(l.window);
                in_shape[2] *= static_cast<std::size_t>(l.window);
                delta = avgpool_backward(delta, l.window, in_shape);
                break;
            }
            case LayerKind::Relu:
                delta = mul(delta, rec.surrogates[n]);
                break;
            case LayerKind::Dropout:
                if (!rec.dropout_masks[n].empty()) delta = mul(delta, rec.dropout_masks[n]);
                break;
            case LayerKind::Flatten: {
                // recover the pre-flatten shape from the adjacent trace if
                // needed; flatten only ever reshapes, so walk the chain
                Shape s = model.input_shape;
                for (std::size_t i = 0; i < n; ++i) s = layer_output_shape(model.layers[i], s);
                delta = delta.reshaped(s);
                break;
            }
        }
    }
    return grads;
}

}  // namespace

SnnModel train_snn_bp(SnnModel model, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ValueError("training dataset is empty");
    if (model.provenance != Provenance::SpikeTrained) {
        throw ConfigError("spike-based training requires spike-trained provenance");
    }
    for (std::size_t i : model.spiking_layer_indices()) {
        if (model.neuron_params[i].leak != LeakMode::Exponential) {
            throw ConfigError("spike-based training requires LIF neurons");
        }
    }
    const int classes = model.num_classes();
    for (const Sample& s : data.items) {
        if (s.label < 0 || s.label >= classes) {
            throw ValueError("label " + std::to_string(s.label) + " out of range");
        }
    }

    SeededRng root(cfg.seed, 0x736e6e32ull);  // spike-training stream family
    double lr = cfg.learning_rate;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (std::find(cfg.anneal_epochs.begin(), cfg.anneal_epochs.end(), epoch) !=
            cfg.anneal_epochs.end()) {
            lr /= 10.0;
        }
        SeededRng epoch_rng = root.child(static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(epoch_rng.next_below(i));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch_end =
                std::min(pos + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double batch_n = static_cast<double>(batch_end - pos);
            std::vector<Tensor> acc(model.layers.size());
            for (; pos < batch_end; ++pos) {
                const std::size_t idx = order[pos];
                const Sample& s = data.items[idx];
                SeededRng encode_rng = epoch_rng.child(2 * idx + 2);
                SeededRng dropout_rng = epoch_rng.child(2 * idx + 3);
                const SpikeTrain train = poisson_encode(s.x, model.horizon, encode_rng);
                SpikeForwardRecord rec = spike_forward(model, train, s.label, &dropout_rng);
                epoch_loss += rec.loss;
                std::vector<Tensor> grads = spike_backward(model, rec);
                for (std::size_t i = 0; i < grads.size(); ++i) {
                    if (grads[i].empty()) continue;
                    if (acc[i].empty()) {
                        acc[i] = std::move(grads[i]);
                    } else {
                        for (std::size_t j = 0; j < acc[i].size(); ++j) acc[i][j] += grads[i][j];
                    }
                }
            }
            const double step = lr / batch_n;
            for (std::size_t i = 0; i < acc.size(); ++i) {
                if (acc[i].empty()) continue;
                for (std::size_t j = 0; j < acc[i].size(); ++j) model.weights[i][j] -= step * acc[i][j];
            }
        }
        epoch_loss /= static_cast<double>(data.size());
        if (!std::isfinite(epoch_loss)) {
            throw TrainingDivergedError(epoch, "spike training diverged at epoch " +
                                                   std::to_string(epoch));
        }
        if (cfg.log) cfg.log(epoch, epoch_loss);
    }
    return model;
}

Tensor snn_scores(const SnnModel& model, const Tensor& x, SeededRng& rng) {
    const SpikeTrain train = poisson_encode(x, model.horizon, rng);
    return snn_forward(model, train);
}

double snn_accuracy(const SnnModel& model, const Dataset& data, std::uint64_t encode_seed) {
    if (data.empty()) throw ValueError("accuracy of an empty dataset");
    SeededRng root(encode_seed, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        SeededRng rng = root.child(i);
        const Tensor scores = snn_scores(model, data[i].x, rng);
        if (static_cast<int>(argmax(scores)) == data[i].label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace snnadv
