// Command line surface: dataset ingestion, model training/conversion,
// adversarial set crafting, single-scenario evaluation, the full
// whitebox/blackbox matrix and report format conversion.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "snnadv/attacks.hpp"
#include "snnadv/conversion.hpp"
#include "snnadv/dataset.hpp"
#include "snnadv/harness.hpp"
#include "snnadv/model_io.hpp"
#include "snnadv/report.hpp"

using namespace snnadv;
using nlohmann::json;

namespace {

struct DatasetArgs {
    std::string images;
    std::string labels;
    std::string data;  // cifar10-bin file or dataset container
    std::string format = "mnist-idx";
    std::uint64_t limit = 0;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--images", images, "MNIST IDX image file");
        cmd.add_option("--labels", labels, "MNIST IDX label file (inferred from --images if omitted)");
        cmd.add_option("--data", data, "dataset file for cifar10-bin / container formats");
        cmd.add_option("--data-format", format, "mnist-idx | cifar10-bin | container")
            ->check(CLI::IsMember({"mnist-idx", "cifar10-bin", "container"}));
        cmd.add_option("--limit", limit, "keep only the first N records");
    }

    Dataset load() const {
        const std::optional<std::size_t> lim =
            limit > 0 ? std::optional<std::size_t>(limit) : std::nullopt;
        if (format == "mnist-idx") {
            if (images.empty()) throw ConfigError("mnist-idx input needs --images");
            const std::string lab = labels.empty() ? mnist_labels_path_for(images) : labels;
            return load_mnist_idx(images, lab, lim);
        }
        if (data.empty()) throw ConfigError(format + " input needs --data");
        if (format == "cifar10-bin") return load_cifar10_bin(data, lim);
        return load_dataset_container(data, lim);
    }
};

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return j;
}

std::vector<LayerSpec> layers_from_json(const json& arr) {
    std::vector<LayerSpec> out;
    for (const auto& j : arr) {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "conv2d") {
            out.push_back(LayerSpec::conv2d(j.at("out-maps").get<int>(), j.at("kernel").get<int>()));
        } else if (kind == "avgpool") {
            out.push_back(LayerSpec::avgpool(j.at("window").get<int>()));
        } else if (kind == "dense") {
            out.push_back(LayerSpec::dense(j.at("units").get<int>()));
        } else if (kind == "relu") {
            out.push_back(LayerSpec::relu());
        } else if (kind == "dropout") {
            out.push_back(LayerSpec::dropout(j.at("rate").get<double>()));
        } else if (kind == "flatten") {
            out.push_back(LayerSpec::flatten());
        } else {
            throw ConfigError("unknown layer kind in config: " + kind);
        }
    }
    return out;
}

std::vector<LayerSpec> default_mlp_layers(int classes) {
    return {LayerSpec::flatten(), LayerSpec::dense(64), LayerSpec::relu(), LayerSpec::dense(classes)};
}

TrainConfig train_config_from_json(const json& j, bool verbose) {
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", 30);
    cfg.learning_rate = j.value("learning-rate", 0.1);
    cfg.anneal_epochs = j.value("anneal-epochs", std::vector<int>{});
    cfg.batch_size = j.value("batch-size", 32);
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (verbose) {
        cfg.log = [](int epoch, double loss) {
            std::cerr << "epoch " << epoch << " loss " << loss << "\n";
        };
    }
    return cfg;
}

AttackConfig attack_from_json(const json& j) {
    AttackConfig cfg;
    cfg.method = attack_method_from_name(j.value("method", "fgsm"));
    cfg.epsilon = j.value("epsilon", 8.0 / 255.0);
    cfg.alpha = j.value("alpha", 0.0);
    cfg.steps = j.value("steps", cfg.method == AttackMethod::Fgsm ? 1 : 2);
    const std::string mode = j.value("mode", "non-targeted");
    if (mode == "targeted-random") {
        cfg.mode = AttackMode::TargetedRandom;
    } else if (mode != "non-targeted") {
        throw ConfigError("unknown attack mode: " + mode);
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.domain_clamp = j.value("domain-clamp", false);
    cfg.validate();
    return cfg;
}

struct AttackArgs {
    std::string method = "fgsm";
    double epsilon = 8.0 / 255.0;
    double alpha = 0.0;
    int steps = 0;
    bool targeted = false;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--method", method, "fgsm | rfgsm | ifgsm")
            ->check(CLI::IsMember({"fgsm", "rfgsm", "ifgsm"}));
        cmd.add_option("--epsilon", epsilon, "L-inf budget in pixel units");
        cmd.add_option("--alpha", alpha, "noise step (rfgsm) / step size (ifgsm)");
        cmd.add_option("--steps", steps, "iteration count k");
        cmd.add_flag("--targeted", targeted, "targeted-random mode (ifgsm)");
    }

    AttackConfig to_config(std::uint64_t seed, bool domain_clamp) const {
        AttackConfig cfg;
        cfg.method = attack_method_from_name(method);
        cfg.epsilon = epsilon;
        cfg.alpha = alpha;
        cfg.steps = steps > 0 ? steps : (cfg.method == AttackMethod::Fgsm ? 1 : 2);
        cfg.mode = targeted ? AttackMode::TargetedRandom : AttackMode::NonTargeted;
        cfg.seed = seed;
        cfg.domain_clamp = domain_clamp;
        cfg.validate();
        return cfg;
    }
};

json attack_to_json(const AttackConfig& cfg) {
    json j;
    j["method"] = attack_method_name(cfg.method);
    j["epsilon"] = cfg.epsilon;
    j["alpha"] = cfg.alpha;
    j["steps"] = cfg.steps;
    j["mode"] = cfg.mode == AttackMode::TargetedRandom ? "targeted-random" : "non-targeted";
    j["seed"] = cfg.seed;
    j["domain-clamp"] = cfg.domain_clamp;
    return j;
}

void write_report_or_print(const EvalReport& report, const std::string& out,
                           const std::string& format) {
    const ReportFormat fmt = report_format_from_name(format);
    if (out.empty()) {
        std::cout << (fmt == ReportFormat::Csv ? report_to_csv(report) : report_to_json(report));
    } else {
        emit_report(report, out, fmt);
    }
}

int cmd_train_ann(const DatasetArgs& ds_args, const std::string& config_path, std::uint64_t seed,
                  const std::string& out, const std::string& name, bool no_bias, bool quiet) {
    const Dataset data = ds_args.load();
    json cfg_json = config_path.empty() ? json::object() : load_json(config_path);
    std::vector<LayerSpec> layers = cfg_json.contains("layers")
                                        ? layers_from_json(cfg_json.at("layers"))
                                        : default_mlp_layers(data.num_classes);
    AnnModel model = make_ann(data.input_shape(), std::move(layers));
    model.use_bias = !no_bias && cfg_json.value("use-bias", true);

    TrainConfig cfg = train_config_from_json(cfg_json, !quiet);
    if (seed != 0) cfg.seed = seed;
    SeededRng init_rng(cfg.seed, 0x696e6974ull);
    init_weights(model, init_rng);
    model = train_ann(model, data, cfg);
    std::cerr << "train accuracy " << accuracy(model, data) << "\n";
    save_ann(model, out, name);
    return 0;
}

int cmd_train_snn(const DatasetArgs& ds_args, const std::string& config_path, std::uint64_t seed,
                  const std::string& out, const std::string& name, bool quiet) {
    const Dataset data = ds_args.load();
    json cfg_json = config_path.empty() ? json::object() : load_json(config_path);
    std::vector<LayerSpec> layers = cfg_json.contains("layers")
                                        ? layers_from_json(cfg_json.at("layers"))
                                        : default_mlp_layers(data.num_classes);
    const json snn_json = cfg_json.value("snn", json::object());
    NeuronParams params;
    params.leak = LeakMode::Exponential;
    params.tau = snn_json.value("tau", 20.0);
    params.v_th = snn_json.value("v-th", 1.0);
    params.reset = snn_json.value("reset", std::string("to-zero")) == "subtract-threshold"
                       ? ResetMode::SubtractThreshold
                       : ResetMode::ToZero;
    const int horizon = snn_json.value("T", 70);

    SnnModel model = make_snn(data.input_shape(), std::move(layers), params, horizon,
                              Provenance::SpikeTrained);
    TrainConfig cfg = train_config_from_json(cfg_json, !quiet);
    if (cfg_json.contains("learning-rate") == false) cfg.learning_rate = 1.0;
    if (seed != 0) cfg.seed = seed;
    SeededRng init_rng(cfg.seed, 0x696e6974ull);
    init_weights(model, init_rng);
    model = train_snn_bp(model, data, cfg);
    std::cerr << "train accuracy " << snn_accuracy(model, data, derive_seed(cfg.seed, 1)) << "\n";
    save_snn(model, out, name);
    return 0;
}

int cmd_convert(const std::string& model_path, const DatasetArgs& ds_args, int t_cal, int horizon,
                std::uint64_t seed, const std::string& out, const std::string& name) {
    const ModelFile src = load_model(model_path);
    const Dataset calib = ds_args.load();
    ConvertOptions opts;
    opts.t_cal = t_cal;
    opts.horizon = horizon;
    SeededRng rng(seed, 0x63616cull);
    const auto [snn, report] = convert_ann_to_snn(src.ann(), calib, opts, rng);
    std::cerr << "balanced thresholds:";
    for (double v : report.thresholds) std::cerr << " " << v;
    std::cerr << "\n";
    save_snn(snn, out, name.empty() ? src.name : name, &report);
    return 0;
}

int cmd_craft(const std::string& model_path, const DatasetArgs& ds_args, const AttackArgs& atk,
              std::uint64_t seed, int horizon, bool domain_clamp, const std::string& out) {
    const ModelFile src = load_model(model_path);
    const Dataset data = ds_args.load();
    const AttackConfig cfg = atk.to_config(seed, domain_clamp);
    std::vector<AdvExample> advs;
    if (src.is_snn()) {
        const int T = horizon > 0 ? horizon : src.snn().horizon;
        SeededRng enc(derive_seed(seed, 0x656e63ull), 0);
        advs = snn_adv(data, src.snn(), cfg, T, enc, src.name);
    } else {
        advs = ann_adv(data, src.ann(), cfg, src.name);
    }
    json note;
    note["source"] = src.name;
    note["attack"] = attack_to_json(cfg);
    save_dataset_container(adv_to_dataset(advs, data.num_classes), out, note.dump());
    std::cerr << "crafted " << advs.size() << " examples -> " << out << "\n";
    return 0;
}

int cmd_eval(const std::string& target_path, const std::string& source_path,
             const std::string& adv_path, const std::string& scenario, const DatasetArgs& ds_args,
             const AttackArgs& atk, std::uint64_t seed, bool domain_clamp, const std::string& out,
             const std::string& format) {
    const ModelFile target = load_model(target_path);
    const Dataset clean = ds_args.load();
    const ScenarioKind kind = scenario_from_name(scenario);

    EvalReport report;
    if (!adv_path.empty()) {
        std::string note;
        const Dataset advs = load_dataset_container(adv_path, {}, &note);
        std::string source_id = "precrafted";
        AttackConfig cfg = atk.to_config(seed, domain_clamp);
        if (!note.empty()) {
            // crafted sets carry their provenance in the container note
            const json j = json::parse(note, nullptr, false);
            if (!j.is_discarded()) {
                source_id = j.value("source", source_id);
                if (j.contains("attack")) cfg = attack_from_json(j.at("attack"));
            }
        }
        report.rows.push_back(eval_on_adv_set(kind, target, source_id, cfg, advs, clean, seed));
    } else {
        if (source_path.empty()) throw ConfigError("eval needs --source or --adv");
        const ModelFile source = load_model(source_path);
        const AttackConfig cfg = atk.to_config(seed, domain_clamp);
        report.rows.push_back(run_scenario(kind, target, source, cfg, clean, seed));
    }
    write_report_or_print(report, out, format);
    return 0;
}

int cmd_matrix(const std::string& config_path, const DatasetArgs& ds_args, std::uint64_t seed,
               bool domain_clamp, const std::string& out, const std::string& format) {
    const json cfg = load_json(config_path);
    const json& model_paths = cfg.at("models");
    ModelSet models;
    models.ann = load_model(model_paths.at(kIdAnn).get<std::string>()).ann();
    models.ann_x = load_model(model_paths.at(kIdAnnX).get<std::string>()).ann();
    models.snn1 = load_model(model_paths.at(kIdSnn1).get<std::string>()).snn();
    models.snn1_x = load_model(model_paths.at(kIdSnn1X).get<std::string>()).snn();
    models.snn2 = load_model(model_paths.at(kIdSnn2).get<std::string>()).snn();
    models.snn2_x = load_model(model_paths.at(kIdSnn2X).get<std::string>()).snn();

    Dataset data;
    if (!ds_args.images.empty() || !ds_args.data.empty()) {
        data = ds_args.load();
    } else if (cfg.contains("dataset")) {
        DatasetArgs from_cfg;
        const json& dj = cfg.at("dataset");
        from_cfg.format = dj.value("format", "mnist-idx");
        from_cfg.images = dj.value("images", "");
        from_cfg.labels = dj.value("labels", "");
        from_cfg.data = dj.value("data", "");
        from_cfg.limit = dj.value("limit", std::uint64_t{0});
        data = from_cfg.load();
    } else {
        throw ConfigError("matrix needs a dataset (flags or config)");
    }

    const std::uint64_t run_seed = seed != 0 ? seed : cfg.value("seed", std::uint64_t{0});
    std::vector<AttackConfig> attacks;
    if (cfg.value("preset-grid", false)) {
        attacks = preset_attack_grid(run_seed);
    } else {
        for (const auto& aj : cfg.at("attacks")) attacks.push_back(attack_from_json(aj));
    }
    if (domain_clamp) {
        for (AttackConfig& a : attacks) a.domain_clamp = true;
    }

    const EvalReport report = run_matrix(models, attacks, data, run_seed);
    write_report_or_print(report, out, format);
    return 0;
}

int cmd_report(const std::string& in, const std::string& out, const std::string& format) {
    const EvalReport report = load_report(in);
    write_report_or_print(report, out, format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conventional and spiking networks under sign-gradient attacks"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = 0;
    std::string out;
    std::string format = "csv";
    bool domain_clamp = false;
    bool quiet = false;
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
    app.add_flag("--domain-clamp", domain_clamp, "clamp adversarial pixels into [-1, 1]");
    app.add_flag("--quiet", quiet, "suppress progress logging");

    DatasetArgs ds_args;
    std::string config_path, model_path, name;

    auto* train_ann_cmd = app.add_subcommand("train-ann", "train a conventional network");
    ds_args.add_to(*train_ann_cmd);
    train_ann_cmd->add_option("--config", config_path, "training config JSON");
    train_ann_cmd->add_option("--out", out, "model output path")->required();
    train_ann_cmd->add_option("--name", name, "model id stored in the file");
    bool no_bias = false;
    train_ann_cmd->add_flag("--no-bias", no_bias, "pin biases at zero (conversion-ready)");

    auto* train_snn_cmd = app.add_subcommand("train-snn", "spike-based training");
    ds_args.add_to(*train_snn_cmd);
    train_snn_cmd->add_option("--config", config_path, "training config JSON");
    train_snn_cmd->add_option("--out", out, "model output path")->required();
    train_snn_cmd->add_option("--name", name, "model id stored in the file");

    auto* convert_cmd = app.add_subcommand("convert", "threshold-balance an ANN into a spiking model");
    ds_args.add_to(*convert_cmd);
    convert_cmd->add_option("--model", model_path, "trained ANN model file")->required();
    int t_cal = 200, horizon = 500;
    convert_cmd->add_option("--t-cal", t_cal, "calibration timesteps")->capture_default_str();
    convert_cmd->add_option("--horizon", horizon, "simulation horizon of the converted model")
        ->capture_default_str();
    convert_cmd->add_option("--out", out, "model output path")->required();
    convert_cmd->add_option("--name", name, "model id stored in the file");

    auto* craft_cmd = app.add_subcommand("craft", "emit an adversarial set");
    ds_args.add_to(*craft_cmd);
    AttackArgs atk;
    atk.add_to(*craft_cmd);
    craft_cmd->add_option("--model", model_path, "source model file")->required();
    int craft_T = 0;
    craft_cmd->add_option("--T", craft_T, "encoding horizon for spiking sources");
    craft_cmd->add_option("--out", out, "adversarial set output path")->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate one scenario cell");
    ds_args.add_to(*eval_cmd);
    atk.add_to(*eval_cmd);
    std::string target_path, source_path, adv_path, scenario = "whitebox";
    eval_cmd->add_option("--target", target_path, "target model file")->required();
    eval_cmd->add_option("--source", source_path, "source model file");
    eval_cmd->add_option("--adv", adv_path, "pre-crafted adversarial set");
    eval_cmd->add_option("--scenario", scenario, "whitebox | bb-snn1 | bb-snn2 | bb-ann");
    eval_cmd->add_option("--out", out, "report output path (stdout if omitted)");
    eval_cmd->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    auto* matrix_cmd = app.add_subcommand("matrix", "run the full comparison grid");
    ds_args.add_to(*matrix_cmd);
    matrix_cmd->add_option("--config", config_path, "matrix config JSON")->required();
    matrix_cmd->add_option("--out", out, "report output path (stdout if omitted)");
    matrix_cmd->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    auto* report_cmd = app.add_subcommand("report", "convert or print a report");
    std::string report_in;
    report_cmd->add_option("--in", report_in, "report file (csv or json)")->required();
    report_cmd->add_option("--out", out, "output path (stdout if omitted)");
    report_cmd->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_ann_cmd->parsed()) {
            return cmd_train_ann(ds_args, config_path, seed, out, name, no_bias, quiet);
        }
        if (train_snn_cmd->parsed()) {
            return cmd_train_snn(ds_args, config_path, seed, out, name, quiet);
        }
        if (convert_cmd->parsed()) {
            return cmd_convert(model_path, ds_args, t_cal, horizon, seed, out, name);
        }
        if (craft_cmd->parsed()) {
            return cmd_craft(model_path, ds_args, atk, seed, craft_T, domain_clamp, out);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(target_path, source_path, adv_path, scenario, ds_args, atk, seed,
                            domain_clamp, out, format);
        }
        if (matrix_cmd->parsed()) {
            return cmd_matrix(config_path, ds_args, seed, domain_clamp, out, format);
        }
        if (report_cmd->parsed()) {
            return cmd_report(report_in, out, format);
        }
    } catch (const TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << " (epoch " << e.epoch << ")\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
