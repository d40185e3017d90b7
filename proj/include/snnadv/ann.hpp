#pragma once

#include <functional>
#include <vector>

#include "snnadv/dataset.hpp"
#include "snnadv/layers.hpp"
#include "snnadv/rng.hpp"
#include "snnadv/tensor.hpp"

namespace snnadv {

enum class Mode { Train, Eval };

struct TrainConfig {
    int epochs = 20;
    double learning_rate = 0.1;
    std::vector<int> anneal_epochs;  // strictly increasing, < epochs; rate /= 10 at each
    int batch_size = 32;
    std::uint64_t seed = 0;
    // called once per epoch with the mean training loss; null = silent
    std::function<void(int epoch, double loss)> log;

    void validate() const;
};

// Feed-forward network: ordered layer specs plus per-layer weights.
// weights[i]/biases[i] are empty tensors for non-weighted layers.
struct AnnModel {
    Shape input_shape;
    std::vector<LayerSpec> layers;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    // when false, biases stay pinned at zero through training (used for
    // networks meant to be converted to spiking form, which carry no bias)
    bool use_bias = true;

    Shape output_shape() const;
    int num_classes() const;
    bool has_dropout() const;
};

// Validates the chain and allocates zero weights.
AnnModel make_ann(Shape input_shape, std::vector<LayerSpec> layers);

// Per-layer uniform init with a fan-in bound; biases start at zero.
void init_weights(AnnModel& model, SeededRng& rng);

// Eval mode is deterministic; train mode applies inverted-scaling dropout
// and requires an rng when the model has dropout layers.
Tensor ann_forward(const AnnModel& model, const Tensor& x, Mode mode = Mode::Eval,
                   SeededRng* rng = nullptr);

Tensor softmax(const Tensor& logits);
// Returns J; when dlogits is non-null it receives softmax(logits) - onehot.
double softmax_cross_entropy(const Tensor& logits, int label, Tensor* dlogits = nullptr);

struct Gradients {
    double loss = 0.0;
    std::vector<Tensor> weights;  // dJ/dW per layer (empty where unweighted)
    std::vector<Tensor> biases;
    Tensor input;  // dJ/dx
};

// Exact analytic gradients of the softmax cross-entropy loss with respect
// to every parameter and to the input. Attack-time callers use Eval mode
// (dropout off); train() passes Train mode with its own rng.
Gradients loss_and_grads(const AnnModel& model, const Tensor& x, int label,
                         Mode mode = Mode::Eval, SeededRng* rng = nullptr);

// Mini-batch SGD with step annealing. Deterministic for a fixed seed.
AnnModel train_ann(AnnModel model, const Dataset& data, const TrainConfig& cfg);

// Fraction of argmax(logits) == label; ties break toward the lowest class.
double accuracy(const AnnModel& model, const Dataset& data);

}  // namespace snnadv
