#pragma once

#include <functional>
#include <vector>

#include "snnadv/ann.hpp"
#include "snnadv/dataset.hpp"
#include "snnadv/layers.hpp"
#include "snnadv/rng.hpp"
#include "snnadv/tensor.hpp"

namespace snnadv {

enum class LeakMode { None, Exponential };
enum class ResetMode { ToZero, SubtractThreshold };
enum class Provenance { Converted, SpikeTrained };

struct NeuronParams {
    double v_th = 1.0;
    double tau = 20.0;  // timesteps
    LeakMode leak = LeakMode::None;
    ResetMode reset = ResetMode::ToZero;

    void validate() const;
    // per-step membrane decay: exp(-1/tau) for LIF, 1 for IF
    double decay() const;
};

// Spiking network over the same layer vocabulary as AnnModel. Relu slots
// mark the spiking nonlinearities; the final (dense) layer accumulates
// weighted input over the horizon without firing or leaking. Biases are
// fixed at zero. Dropout entries are inert at inference.
struct SnnModel {
    Shape input_shape;
    std::vector<LayerSpec> layers;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;  // kept for structural symmetry; always zero
    std::vector<NeuronParams> neuron_params;  // aligned with layers, used at Relu slots
    int horizon = 70;  // T
    Provenance provenance = Provenance::SpikeTrained;

    std::vector<std::size_t> spiking_layer_indices() const;
    int num_classes() const;
};

// Validates the chain: final layer is dense, every other weighted layer is
// followed by a spiking slot before the next weighted layer, T >= 1.
SnnModel make_snn(Shape input_shape, std::vector<LayerSpec> layers, const NeuronParams& shared,
                  int horizon, Provenance provenance);

void init_weights(SnnModel& model, SeededRng& rng);

// Signed spike raster over T steps: values in {-1, 0, +1}, a pixel's sign
// constant over time.
struct SpikeTrain {
    Tensor events;  // [T, pixels...]
    int T = 0;
    std::uint64_t seed = 0;
    Shape pixel_shape;

    Tensor step(int t) const;  // timestep t as a pixel-shaped tensor
};

// Each pixel fires independently per step with probability |x|, carrying
// sign(x). Requires |x| <= 1 everywhere.
SpikeTrain poisson_encode(const Tensor& x, int T, SeededRng& rng);

// Per-pixel signed mean over the horizon.
Tensor rate_decode(const SpikeTrain& train);

struct NeuronState {
    Tensor v_mem;
};

// One discrete-time update: integrate (v <- decay*v + input), compare
// against v_th, reset per reset-mode, in that order. Returns 0/1 spikes.
Tensor neuron_step(NeuronState& state, const Tensor& input_current, const NeuronParams& p);

struct SimHooks {
    // pre-activation input current entering a spiking slot, per step
    std::function<void(std::size_t layer, int t, const Tensor& current)> on_current;
    std::function<void(std::size_t layer, int t, const Tensor& spikes)> on_spikes;
    // per-layer multiplicative masks applied at Dropout slots (spike-based
    // training uses one fixed mask per sample); empty tensor = inert
    const std::vector<Tensor>* dropout_masks = nullptr;
};

// Simulates the full horizon; returns the output layer's accumulated
// potentials. Deterministic given the SpikeTrain.
Tensor snn_forward(const SnnModel& model, const SpikeTrain& train, const SimHooks* hooks = nullptr);

// Low-pass filtered spike activation. spikes: [T, n...] in step order
// (row r = time r+1); returns the trace series of the same shape, where
// row r holds a(r+1) = a(r)*exp(-1/tau) + s(r+1)/T, a(0) = 0.
Tensor activation_trace(const Tensor& spikes, double tau, int T);

// One recurrence step of the trace above.
Tensor trace_step(const Tensor& prev, const Tensor& spikes, double tau, int T);

// Surrogate derivative of the spike nonlinearity at time t (1-based):
// max(0, (1 + a(t) - a(t-1)) / v_th), elementwise over the trace series.
Tensor surrogate_grad(const Tensor& trace_series, const NeuronParams& p, int t);

// Direct spike-based training: Poisson-encoded forward per sample, softmax
// cross-entropy on the accumulated output scores, backward pass using the
// spike traces as layer activations and the surrogate derivative at the
// spiking slots. Requires spike-trained provenance and LIF neurons.
SnnModel train_snn_bp(SnnModel model, const Dataset& data, const TrainConfig& cfg);

// Encode x with the given stream and simulate; convenience for evaluation.
Tensor snn_scores(const SnnModel& model, const Tensor& x, SeededRng& rng);

// Fraction correct over the dataset; sample i is encoded with the child
// stream i of (seed, stream-id 0).
double snn_accuracy(const SnnModel& model, const Dataset& data, std::uint64_t encode_seed);

}  // namespace snnadv
