#pragma once

#include <utility>
#include <vector>

#include "snnadv/ann.hpp"
#include "snnadv/snn.hpp"

namespace snnadv {

// Outcome of layer-wise threshold balancing.
struct BalanceReport {
    std::vector<double> thresholds;  // one per spiking layer, in layer order
    int t_cal = 0;                   // calibration horizon
    int sample_count = 0;
};

struct ConvertOptions {
    int t_cal = 200;       // calibration timesteps
    int horizon = 500;     // resulting model's simulation horizon
    ResetMode reset = ResetMode::SubtractThreshold;
};

// ANN -> SNN by threshold balancing: weights copied unchanged, ReLUs become
// IF neurons, dropout removed, biases fixed at zero. Thresholds are set
// sequentially: with layers before l already balanced, the calibration
// spike trains are simulated and v_th(l) becomes the maximum pre-activation
// input current observed at layer l over all neurons, timesteps and samples.
std::pair<SnnModel, BalanceReport> convert_ann_to_snn(const AnnModel& ann, const Dataset& calib,
                                                      const ConvertOptions& opts, SeededRng& rng);

// ReLU network with the SNN's topology (dropout disabled): spike-trained
// weights are copied verbatim; converted weights are divided layer-wise by
// the balanced threshold so a unit-threshold IF rate tracks the ReLU output.
AnnModel build_transformed_ann(const SnnModel& snn);

}  // namespace snnadv
