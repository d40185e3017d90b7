#pragma once

#include <string>
#include <vector>

#include "snnadv/rng.hpp"
#include "snnadv/tensor.hpp"

namespace snnadv {

enum class LayerKind { Conv2d, AvgPool, Dense, Relu, Dropout, Flatten };

std::string layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

// One entry of a feed-forward chain. Geometry (input/output shapes, weight
// shapes) is derived from the predecessor; inconsistent chains are rejected
// when a model is built.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int out_maps = 0;    // conv2d
    int kernel = 0;      // conv2d, odd; same-padding, stride 1
    int window = 0;      // avgpool, non-overlapping
    int units = 0;       // dense
    double rate = 0.0;   // dropout, in [0, 1)

    static LayerSpec conv2d(int out_maps, int kernel);
    static LayerSpec avgpool(int window);
    static LayerSpec dense(int units);
    static LayerSpec relu();
    static LayerSpec dropout(double rate);
    static LayerSpec flatten();

    bool has_weights() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
    bool operator==(const LayerSpec&) const = default;
};

// Output shape of `spec` applied to input of shape `in`; throws ShapeError
// on an inconsistent combination (this is the chain validator).
Shape layer_output_shape(const LayerSpec& spec, const Shape& in);

// Weight/bias shapes for a weighted layer ({} for the rest).
Shape layer_weight_shape(const LayerSpec& spec, const Shape& in);
Shape layer_bias_shape(const LayerSpec& spec);

// ---- layer arithmetic -------------------------------------------------
// Shared by the ANN pass, the per-timestep SNN simulation and the
// trace-based SNN backward pass. All gradients are exact analytic
// derivatives of the corresponding forward map.

// y = W x + b, W: [out, in], x: [in]
Tensor dense_forward(const Tensor& w, const Tensor& b, const Tensor& x);
void dense_backward(const Tensor& w, const Tensor& x, const Tensor& dy,
                    Tensor& dw, Tensor& db, Tensor& dx);

// Cross-correlation with zero same-padding, stride 1.
// x: [C, H, W], k: [M, C, K, K], b: [M] -> y: [M, H, W]
Tensor conv2d_forward(const Tensor& k, const Tensor& b, const Tensor& x);
void conv2d_backward(const Tensor& k, const Tensor& x, const Tensor& dy,
                     Tensor& dk, Tensor& db, Tensor& dx);

// Non-overlapping window mean; backward spreads the gradient uniformly.
Tensor avgpool_forward(const Tensor& x, int window);
Tensor avgpool_backward(const Tensor& dy, int window, const Shape& in_shape);

Tensor relu_forward(const Tensor& x);
// dx = dy where pre > 0, else 0 (derivative at 0 taken as 0)
Tensor relu_backward(const Tensor& pre, const Tensor& dy);

// Uniform init bounded by sqrt(6 / fan_in), one child stream per layer
// index; empty tensors are skipped.
void fanin_uniform_init(std::vector<Tensor>& weights, SeededRng& rng);

}  // namespace snnadv
