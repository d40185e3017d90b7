#include "snnadv/model_io.hpp"

#include "container.hpp"

namespace snnadv {

namespace {

constexpr char kModelMagic[8] = {'S', 'N', 'A', 'D', 'V', 'M', 'D', 'L'};

nlohmann::json layer_to_json(const LayerSpec& l) {
    nlohmann::json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::Conv2d:
            j["out-maps"] = l.out_maps;
            j["kernel"] = l.kernel;
            break;
        case LayerKind::AvgPool:
            j["window"] = l.window;
            break;
        case LayerKind::Dense:
            j["units"] = l.units;
            break;
        case LayerKind::Dropout:
            j["rate"] = l.rate;
            break;
        default:
            break;
    }
    return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
    const LayerKind kind = layer_kind_from_name(j.at("kind").get<std::string>());
    switch (kind) {
        case LayerKind::Conv2d:
            return LayerSpec::conv2d(j.at("out-maps").get<int>(), j.at("kernel").get<int>());
        case LayerKind::AvgPool:
            return LayerSpec::avgpool(j.at("window").get<int>());
        case LayerKind::Dense:
            return LayerSpec::dense(j.at("units").get<int>());
        case LayerKind::Relu:
            return LayerSpec::relu();
        case LayerKind::Dropout:
            return LayerSpec::dropout(j.at("rate").get<double>());
        case LayerKind::Flatten:
            return LayerSpec::flatten();
    }
    throw FormatError("bad layer kind");
}

// Weight tensors (and any double-valued metadata) travel in the binary
// payload so values round-trip exactly; the manifest only records shapes.
void append_tensor(nlohmann::json& tensors, std::vector<double>& payload, const std::string& role,
                   int layer, const Tensor& t) {
    nlohmann::json entry;
    entry["role"] = role;
    entry["layer"] = layer;
    entry["shape"] = t.shape();
    tensors.push_back(entry);
    payload.insert(payload.end(), t.values().begin(), t.values().end());
}

std::string leak_name(LeakMode m) { return m == LeakMode::None ? "none" : "exponential"; }
LeakMode leak_from(const std::string& s) {
    if (s == "none") return LeakMode::None;
    if (s == "exponential") return LeakMode::Exponential;
    throw FormatError("bad leak mode: " + s);
}
std::string reset_name(ResetMode m) {
    return m == ResetMode::ToZero ? "to-zero" : "subtract-threshold";
}
ResetMode reset_from(const std::string& s) {
    if (s == "to-zero") return ResetMode::ToZero;
    if (s == "subtract-threshold") return ResetMode::SubtractThreshold;
    throw FormatError("bad reset mode: " + s);
}

}  // namespace

const AnnModel& ModelFile::ann() const {
    if (is_snn()) throw ConfigError("model '" + name + "' is spiking, expected conventional");
    return std::get<AnnModel>(model);
}

const SnnModel& ModelFile::snn() const {
    if (!is_snn()) throw ConfigError("model '" + name + "' is conventional, expected spiking");
    return std::get<SnnModel>(model);
}

void save_model(const ModelFile& file, const std::string& path) {
    nlohmann::json manifest;
    manifest["name"] = file.name;
    nlohmann::json tensors = nlohmann::json::array();
    std::vector<double> payload;

    if (!file.is_snn()) {
        const AnnModel& m = std::get<AnnModel>(file.model);
        manifest["kind"] = "ann";
        manifest["input-shape"] = m.input_shape;
        manifest["use-bias"] = m.use_bias;
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : m.layers) layers.push_back(layer_to_json(l));
        manifest["layers"] = layers;
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            if (m.weights[i].empty()) continue;
            append_tensor(tensors, payload, "weight", static_cast<int>(i), m.weights[i]);
            append_tensor(tensors, payload, "bias", static_cast<int>(i), m.biases[i]);
        }
    } else {
        const SnnModel& m = std::get<SnnModel>(file.model);
        manifest["kind"] = "snn";
        manifest["input-shape"] = m.input_shape;
        manifest["horizon"] = m.horizon;
        manifest["provenance"] =
            m.provenance == Provenance::Converted ? "converted" : "spike-trained";
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : m.layers) layers.push_back(layer_to_json(l));
        manifest["layers"] = layers;
        nlohmann::json neurons = nlohmann::json::array();
        Tensor thresholds({std::max<std::size_t>(m.spiking_layer_indices().size(), 1)});
        Tensor taus(thresholds.shape());
        std::size_t slot = 0;
        for (std::size_t i : m.spiking_layer_indices()) {
            const NeuronParams& p = m.neuron_params[i];
            nlohmann::json nj;
            nj["layer"] = i;
            nj["leak"] = leak_name(p.leak);
            nj["reset"] = reset_name(p.reset);
            neurons.push_back(nj);
            thresholds[slot] = p.v_th;
            taus[slot] = p.tau;
            ++slot;
        }
        manifest["neurons"] = neurons;
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            if (m.weights[i].empty()) continue;
            append_tensor(tensors, payload, "weight", static_cast<int>(i), m.weights[i]);
        }
        if (slot > 0) {
            append_tensor(tensors, payload, "v-th", -1, thresholds);
            append_tensor(tensors, payload, "tau", -1, taus);
        }
        if (file.balance) {
            manifest["balance"] = {{"t-cal", file.balance->t_cal},
                                   {"samples", file.balance->sample_count}};
            Tensor bt({std::max<std::size_t>(file.balance->thresholds.size(), 1)});
            for (std::size_t i = 0; i < file.balance->thresholds.size(); ++i) {
                bt[i] = file.balance->thresholds[i];
            }
            manifest["balance"]["count"] = file.balance->thresholds.size();
            append_tensor(tensors, payload, "balance-thresholds", -1, bt);
        }
    }
    manifest["tensors"] = tensors;
    detail::write_container(path, kModelMagic, manifest, payload);
}

ModelFile load_model(const std::string& path) {
    auto [manifest, payload] = detail::read_container(path, kModelMagic);
    ModelFile file;
    file.name = manifest.value("name", "");
    const std::string kind = manifest.at("kind").get<std::string>();

    std::vector<LayerSpec> layers;
    for (const auto& lj : manifest.at("layers")) layers.push_back(layer_from_json(lj));
    const auto input_shape = manifest.at("input-shape").get<Shape>();

    // payload cursor driven by the manifest's tensor table
    std::size_t cursor = 0;
    struct Entry {
        std::string role;
        int layer;
        Tensor tensor;
    };
    std::vector<Entry> entries;
    for (const auto& tj : manifest.at("tensors")) {
        Entry e;
        e.role = tj.at("role").get<std::string>();
        e.layer = tj.at("layer").get<int>();
        const auto shape = tj.at("shape").get<Shape>();
        const std::size_t n = shape_numel(shape);
        if (cursor + n > payload.size()) {
            throw FormatError(path + ": payload exhausted while reading tensor '" + e.role + "'");
        }
        e.tensor = Tensor(shape, std::vector<double>(payload.begin() + static_cast<std::ptrdiff_t>(cursor),
                                                     payload.begin() + static_cast<std::ptrdiff_t>(cursor + n)));
        cursor += n;
        entries.push_back(std::move(e));
    }

    if (kind == "ann") {
        AnnModel m = make_ann(input_shape, layers);
        m.use_bias = manifest.value("use-bias", true);
        for (auto& e : entries) {
            if (e.layer < 0 || static_cast<std::size_t>(e.layer) >= m.layers.size()) {
                throw FormatError(path + ": tensor layer index out of range");
            }
            if (e.role == "weight") {
                if (!e.tensor.same_shape(m.weights[static_cast<std::size_t>(e.layer)])) {
                    throw FormatError(path + ": weight shape mismatch at layer " + std::to_string(e.layer));
                }
                m.weights[static_cast<std::size_t>(e.layer)] = std::move(e.tensor);
            } else if (e.role == "bias") {
                m.biases[static_cast<std::size_t>(e.layer)] = std::move(e.tensor);
            }
        }
        file.model = std::move(m);
    } else if (kind == "snn") {
        NeuronParams base;
        SnnModel m = make_snn(input_shape, layers, base, manifest.at("horizon").get<int>(),
                              manifest.at("provenance").get<std::string>() == "converted"
                                  ? Provenance::Converted
                                  : Provenance::SpikeTrained);
        Tensor thresholds, taus;
        for (auto& e : entries) {
            if (e.role == "weight") {
                if (e.layer < 0 || static_cast<std::size_t>(e.layer) >= m.layers.size()) {
                    throw FormatError(path + ": tensor layer index out of range");
                }
                m.weights[static_cast<std::size_t>(e.layer)] = std::move(e.tensor);
            } else if (e.role == "v-th") {
                thresholds = std::move(e.tensor);
            } else if (e.role == "tau") {
                taus = std::move(e.tensor);
            } else if (e.role == "balance-thresholds") {
                BalanceReport r;
                r.t_cal = manifest.at("balance").at("t-cal").get<int>();
                r.sample_count = manifest.at("balance").at("samples").get<int>();
                const auto count = manifest.at("balance").at("count").get<std::size_t>();
                for (std::size_t i = 0; i < count; ++i) r.thresholds.push_back(e.tensor[i]);
                file.balance = std::move(r);
            }
        }
        std::size_t slot = 0;
        for (const auto& nj : manifest.at("neurons")) {
            const auto layer = nj.at("layer").get<std::size_t>();
            if (layer >= m.layers.size() || m.layers[layer].kind != LayerKind::Relu) {
                throw FormatError(path + ": neuron entry does not point at a spiking layer");
            }
            NeuronParams& p = m.neuron_params[layer];
            p.leak = leak_from(nj.at("leak").get<std::string>());
            p.reset = reset_from(nj.at("reset").get<std::string>());
            if (!thresholds.empty()) p.v_th = thresholds[slot];
            if (!taus.empty()) p.tau = taus[slot];
            p.validate();
            ++slot;
        }
        file.model = std::move(m);
    } else {
        throw FormatError(path + ": unknown model kind '" + kind + "'");
    }
    return file;
}

void save_ann(const AnnModel& model, const std::string& path, const std::string& name) {
    ModelFile f;
    f.name = name;
    f.model = model;
    save_model(f, path);
}

void save_snn(const SnnModel& model, const std::string& path, const std::string& name,
              const BalanceReport* balance) {
    ModelFile f;
    f.name = name;
    f.model = model;
    if (balance) f.balance = *balance;
    save_model(f, path);
}

}  // namespace snnadv
