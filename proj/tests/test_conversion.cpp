#include <doctest.h>

#include <cmath>

#include "snnadv/conversion.hpp"

using namespace snnadv;

namespace {

Dataset single_pixel_dataset(double value) {
    Dataset d;
    d.num_classes = 2;
    d.items.push_back({Tensor::from_vector({value, 0.0}), 0});
    return d;
}

AnnModel small_relu_net(std::uint64_t seed) {
    AnnModel m = make_ann({4}, {LayerSpec::dense(6), LayerSpec::relu(), LayerSpec::dense(3)});
    SeededRng rng(seed);
    init_weights(m, rng);
    return m;
}

Dataset random_rate_dataset(int n, std::size_t dim, std::uint64_t seed) {
    Dataset d;
    d.num_classes = 3;
    SeededRng rng(seed);
    for (int i = 0; i < n; ++i) {
        d.items.push_back({rng_uniform(rng, {dim}), i % 3});
    }
    return d;
}

}  // namespace

TEST_CASE("identity layer with an always-firing pixel balances to v_th = 1") {
    AnnModel ann = make_ann({2}, {LayerSpec::dense(2), LayerSpec::relu(), LayerSpec::dense(2)});
    ann.weights[0].at(0, 0) = 1.0;
    ann.weights[0].at(1, 1) = 1.0;
    ann.weights[2].at(0, 0) = 1.0;
    ann.weights[2].at(1, 1) = 1.0;

    ConvertOptions opts;
    opts.t_cal = 50;
    SeededRng rng(1);
    const auto [snn, report] = convert_ann_to_snn(ann, single_pixel_dataset(1.0), opts, rng);
    REQUIRE(report.thresholds.size() == 1);
    CHECK(report.thresholds[0] == 1.0);
    CHECK(report.t_cal == 50);
    CHECK(report.sample_count == 1);
    CHECK(snn.provenance == Provenance::Converted);
    CHECK(snn.neuron_params[1].v_th == 1.0);
    CHECK(snn.neuron_params[1].leak == LeakMode::None);
}

TEST_CASE("scaling first-layer weights scales its balanced threshold by the same factor") {
    AnnModel ann = small_relu_net(21);
    const Dataset calib = random_rate_dataset(20, 4, 5);
    ConvertOptions opts;
    opts.t_cal = 80;

    SeededRng rng_a(77);
    const auto [snn_a, rep_a] = convert_ann_to_snn(ann, calib, opts, rng_a);

    const double c = 3.5;
    AnnModel scaled = ann;
    for (std::size_t i = 0; i < scaled.weights[0].size(); ++i) scaled.weights[0][i] *= c;
    SeededRng rng_b(77);  // same seed -> identical calibration spike trains
    const auto [snn_b, rep_b] = convert_ann_to_snn(scaled, calib, opts, rng_b);

    CHECK(rep_b.thresholds[0] == doctest::Approx(c * rep_a.thresholds[0]).epsilon(1e-12));
}

TEST_CASE("threshold balancing is idempotent for a fixed calibration set and seed") {
    AnnModel ann = small_relu_net(4);
    const Dataset calib = random_rate_dataset(25, 4, 9);
    ConvertOptions opts;
    opts.t_cal = 60;

    SeededRng rng_a(3);
    const auto [snn_a, rep_a] = convert_ann_to_snn(ann, calib, opts, rng_a);
    SeededRng rng_b(3);
    const auto [snn_b, rep_b] = convert_ann_to_snn(ann, calib, opts, rng_b);
    REQUIRE(rep_a.thresholds.size() == rep_b.thresholds.size());
    for (std::size_t i = 0; i < rep_a.thresholds.size(); ++i) {
        CHECK(rep_a.thresholds[i] == rep_b.thresholds[i]);
    }
}

TEST_CASE("no calibration sample drives the current above the balanced threshold") {
    AnnModel ann = small_relu_net(10);
    const Dataset calib = random_rate_dataset(15, 4, 2);
    ConvertOptions opts;
    opts.t_cal = 40;
    SeededRng rng(8);
    const auto [snn, report] = convert_ann_to_snn(ann, calib, opts, rng);

    // replay the same calibration trains against the balanced model
    SnnModel probe = snn;
    probe.horizon = opts.t_cal;
    double worst = 0.0;
    SimHooks hooks;
    const auto slots = snn.spiking_layer_indices();
    hooks.on_current = [&](std::size_t layer, int, const Tensor& cur) {
        for (std::size_t s = 0; s < slots.size(); ++s) {
            if (slots[s] != layer) continue;
            for (std::size_t i = 0; i < cur.size(); ++i) {
                worst = std::max(worst, cur[i] - report.thresholds[s]);
            }
        }
    };
    SeededRng rng2(8);
    for (std::size_t i = 0; i < calib.size(); ++i) {
        SeededRng sample_rng = rng2.child(i);
        const SpikeTrain t = poisson_encode(calib[i].x, opts.t_cal, sample_rng);
        snn_forward(probe, t, &hooks);
    }
    CHECK(worst <= 0.0);
}

TEST_CASE("degenerate calibration is an error, not a silent threshold") {
    AnnModel ann = make_ann({2}, {LayerSpec::dense(2), LayerSpec::relu(), LayerSpec::dense(2)});
    ann.weights[0].at(0, 0) = -1.0;  // currents can never be positive
    ann.weights[0].at(1, 1) = -1.0;
    ConvertOptions opts;
    opts.t_cal = 30;
    SeededRng rng(5);
    CHECK_THROWS_AS(convert_ann_to_snn(ann, single_pixel_dataset(0.9), opts, rng), ConversionError);
}

TEST_CASE("conversion rejects an empty calibration set and keeps dropout out") {
    AnnModel ann = make_ann({2}, {LayerSpec::dense(2), LayerSpec::relu(), LayerSpec::dropout(0.2),
                                  LayerSpec::dense(2)});
    SeededRng wr(2);
    init_weights(ann, wr);
    ConvertOptions opts;
    SeededRng rng(5);
    CHECK_THROWS_AS(convert_ann_to_snn(ann, Dataset{}, opts, rng), ConversionError);

    const auto [snn, report] = convert_ann_to_snn(ann, single_pixel_dataset(1.0), opts, rng);
    for (const LayerSpec& l : snn.layers) CHECK(l.kind != LayerKind::Dropout);
}

TEST_CASE("transformed ANN from a spike-trained SNN carries the weights verbatim") {
    NeuronParams p;
    p.leak = LeakMode::Exponential;
    p.tau = 10.0;
    SnnModel snn = make_snn({4}, {LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dropout(0.2),
                                  LayerSpec::dense(2)},
                            p, 70, Provenance::SpikeTrained);
    SeededRng rng(6);
    init_weights(snn, rng);
    const AnnModel ann = build_transformed_ann(snn);
    REQUIRE(ann.layers.size() == 3);  // dropout disabled
    CHECK(ann.weights[0].bit_equal(snn.weights[0]));
    CHECK(ann.weights[2].bit_equal(snn.weights[3]));
    CHECK_FALSE(ann.use_bias);
}

TEST_CASE("transformed ANN from a converted SNN divides weights by the threshold") {
    NeuronParams p;  // IF
    SnnModel snn = make_snn({3}, {LayerSpec::dense(3), LayerSpec::relu(), LayerSpec::dense(2)}, p,
                            100, Provenance::Converted);
    SeededRng rng(3);
    init_weights(snn, rng);
    snn.neuron_params[1].v_th = 2.0;
    const AnnModel ann = build_transformed_ann(snn);
    for (std::size_t i = 0; i < snn.weights[0].size(); ++i) {
        CHECK(ann.weights[0][i] == snn.weights[0][i] / 2.0);
    }
    // output layer is not rescaled
    CHECK(ann.weights[2].bit_equal(snn.weights[2]));
}

TEST_CASE("convert then transform returns the original weights divided by observed maxima") {
    AnnModel ann = small_relu_net(14);
    const Dataset calib = random_rate_dataset(10, 4, 3);
    ConvertOptions opts;
    opts.t_cal = 50;
    SeededRng rng(4);
    const auto [snn, report] = convert_ann_to_snn(ann, calib, opts, rng);
    const AnnModel back = build_transformed_ann(snn);
    for (std::size_t i = 0; i < ann.weights[0].size(); ++i) {
        CHECK(back.weights[0][i] == ann.weights[0][i] / report.thresholds[0]);
    }
    CHECK(back.weights[2].bit_equal(ann.weights[2]));
}

TEST_CASE("transformed ANN on rate inputs agrees with SNN score argmax most of the time") {
    // toy MLP trained for a short stint so the agreement check is meaningful
    Dataset data = random_rate_dataset(200, 6, 99);
    AnnModel ann = make_ann({6}, {LayerSpec::dense(8), LayerSpec::relu(), LayerSpec::dense(3)});
    SeededRng wrng(5);
    init_weights(ann, wrng);
    ann.use_bias = false;
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.learning_rate = 0.2;
    cfg.seed = 1;
    ann = train_ann(ann, data, cfg);

    ConvertOptions opts;
    opts.t_cal = 150;
    opts.horizon = 300;
    SeededRng crng(12);
    const auto [snn, report] = convert_ann_to_snn(ann, data, opts, crng);
    const AnnModel transformed = build_transformed_ann(snn);

    SeededRng enc_root(31);
    int agree = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        SeededRng enc = enc_root.child(i);
        const SpikeTrain train = poisson_encode(data[i].x, snn.horizon, enc);
        const Tensor scores = snn_forward(snn, train);
        const Tensor logits = ann_forward(transformed, rate_decode(train));
        if (argmax(scores) == argmax(logits)) ++agree;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(data.size()) >= 0.80);
}
