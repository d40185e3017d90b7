#include "snnadv/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snnadv {

std::pair<SnnModel, BalanceReport> convert_ann_to_snn(const AnnModel& ann, const Dataset& calib,
                                                      const ConvertOptions& opts, SeededRng& rng) {
    if (calib.empty()) throw ConversionError("calibration set is empty");
    if (opts.t_cal < 1) throw ConfigError("calibration horizon must be >= 1");

    // supported vocabulary: weighted layers + relu + avgpool + flatten;
    // dropout entries are removed entirely
    std::vector<LayerSpec> specs;
    std::vector<Tensor> weights;
    for (std::size_t i = 0; i < ann.layers.size(); ++i) {
        const LayerSpec& l = ann.layers[i];
        switch (l.kind) {
            case LayerKind::Dropout:
                continue;
            case LayerKind::Conv2d:
            case LayerKind::Dense:
            case LayerKind::AvgPool:
            case LayerKind::Relu:
            case LayerKind::Flatten:
                specs.push_back(l);
                weights.push_back(ann.weights[i]);
                break;
        }
    }

    NeuronParams base;
    base.leak = LeakMode::None;  // IF
    base.reset = opts.reset;
    base.v_th = 1.0;

    SnnModel snn;
    try {
        snn = make_snn(ann.input_shape, specs, base, opts.horizon, Provenance::Converted);
    } catch (const ConfigError& e) {
        throw ConversionError(std::string("unsupported network structure: ") + e.what());
    }
    for (std::size_t i = 0; i < snn.layers.size(); ++i) {
        if (snn.layers[i].has_weights()) snn.weights[i] = weights[i];
        // biases stay zero: spiking dynamics carry no constant-input term
    }

    // one spike train per calibration sample, reused across the sequential
    // balancing passes so every pass sees identical inputs
    std::vector<SpikeTrain> trains;
    trains.reserve(calib.size());
    for (std::size_t s = 0; s < calib.size(); ++s) {
        SeededRng sample_rng = rng.child(s);
        Tensor x = calib[s].x;
        if (x.shape() != ann.input_shape) {
            throw ConversionError("calibration sample shape " + shape_to_string(x.shape()) +
                                  " does not match model input " + shape_to_string(ann.input_shape));
        }
        SpikeTrain t = poisson_encode(x, opts.t_cal, sample_rng);
        trains.push_back(std::move(t));
    }

    const std::vector<std::size_t> slots = snn.spiking_layer_indices();
    BalanceReport report;
    report.t_cal = opts.t_cal;
    report.sample_count = static_cast<int>(calib.size());

    // unbalanced slots must never fire while earlier ones are calibrated
    for (std::size_t i : slots) snn.neuron_params[i].v_th = std::numeric_limits<double>::infinity();

    SnnModel probe = snn;
    probe.horizon = opts.t_cal;
    for (std::size_t pass = 0; pass < slots.size(); ++pass) {
        const std::size_t slot = slots[pass];
        double observed_max = -std::numeric_limits<double>::infinity();
        SimHooks hooks;
        hooks.on_current = [&](std::size_t layer, int /*t*/, const Tensor& current) {
            if (layer != slot) return;
            for (std::size_t i = 0; i < current.size(); ++i) {
                observed_max = std::max(observed_max, current[i]);
            }
        };
        for (const SpikeTrain& train : trains) {
            snn_forward(probe, train, &hooks);
        }
        if (!(observed_max > 0.0)) {
            throw ConversionError("degenerate calibration: no positive input current at layer " +
                                  std::to_string(slot));
        }
        probe.neuron_params[slot].v_th = observed_max;
        report.thresholds.push_back(observed_max);
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
        snn.neuron_params[slots[i]].v_th = report.thresholds[i];
    }
    return {std::move(snn), std::move(report)};
}

AnnModel build_transformed_ann(const SnnModel& snn) {
    std::vector<LayerSpec> specs;
    std::vector<std::size_t> src_index;  // position in the SNN layer list
    for (std::size_t i = 0; i < snn.layers.size(); ++i) {
        if (snn.layers[i].kind == LayerKind::Dropout) continue;  // dropout disabled
        specs.push_back(snn.layers[i]);
        src_index.push_back(i);
    }
    AnnModel ann = make_ann(snn.input_shape, specs);
    ann.use_bias = false;

    // threshold of the spiking slot fed by each weighted layer (the output
    // layer feeds no slot and keeps its weights as-is)
    for (std::size_t j = 0; j < specs.size(); ++j) {
        if (!specs[j].has_weights()) continue;
        const std::size_t i = src_index[j];
        Tensor w = snn.weights[i];
        if (snn.provenance == Provenance::Converted) {
            double v_th = 0.0;
            for (std::size_t k = j + 1; k < specs.size(); ++k) {
                if (specs[k].kind == LayerKind::Relu) {
                    v_th = snn.neuron_params[src_index[k]].v_th;
                    break;
                }
                if (specs[k].has_weights()) break;
            }
            if (v_th > 0.0) {
                for (std::size_t k = 0; k < w.size(); ++k) w[k] /= v_th;
            }
        }
        ann.weights[j] = std::move(w);
        // biases remain zero, matching the spiking network
    }
    return ann;
}

}  // namespace snnadv
