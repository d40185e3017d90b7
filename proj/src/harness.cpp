#include "snnadv/harness.hpp"

#include <cmath>

namespace snnadv {

namespace {

double q4(double v) { return std::round(v * 10000.0) / 10000.0; }

ReportRow make_row(const std::string& scenario, const AttackConfig& cfg, const std::string& source,
                   const std::string& target, double clean, double adv) {
    ReportRow r;
    r.scenario = scenario;
    r.method = cfg.method_label();
    r.epsilon = cfg.epsilon;
    r.steps = cfg.steps;
    r.source = source;
    r.target = target;
    r.clean_acc = q4(clean);
    r.adv_acc = q4(adv);
    r.acc_loss = r.clean_acc - r.adv_acc;
    return r;
}

Tensor saturate_unit(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::min(std::max(x[i], -1.0), 1.0);
    return out;
}

// seed tags, kept distinct per role
constexpr std::uint64_t kTagCleanSnn1 = 101;
constexpr std::uint64_t kTagCleanSnn2 = 102;
constexpr std::uint64_t kTagCraft = 1000;
constexpr std::uint64_t kTagEncode = 2000;
constexpr std::uint64_t kTagEval = 3000;

}  // namespace

std::string scenario_name(ScenarioKind s) {
    switch (s) {
        case ScenarioKind::Whitebox: return "whitebox";
        case ScenarioKind::BbSnn1: return "bb-snn1";
        case ScenarioKind::BbSnn2: return "bb-snn2";
        case ScenarioKind::BbAnn: return "bb-ann";
    }
    return "?";
}

ScenarioKind scenario_from_name(const std::string& name) {
    if (name == "whitebox") return ScenarioKind::Whitebox;
    if (name == "bb-snn1") return ScenarioKind::BbSnn1;
    if (name == "bb-snn2") return ScenarioKind::BbSnn2;
    if (name == "bb-ann") return ScenarioKind::BbAnn;
    throw ValueError("unknown scenario: " + name);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return SeededRng(base, tag).next_u64();
}

double clean_accuracy_ann(const AnnModel& model, const Dataset& data) {
    return accuracy(model, data);
}

double clean_accuracy_snn(const SnnModel& model, const Dataset& data, std::uint64_t encode_seed) {
    return snn_accuracy(model, data, encode_seed);
}

double adv_accuracy_ann(const AnnModel& model, const std::vector<AdvExample>& advs) {
    if (advs.empty()) throw ValueError("accuracy of an empty adversarial set");
    std::size_t hits = 0;
    for (const AdvExample& ex : advs) {
        if (static_cast<int>(argmax(ann_forward(model, ex.x_adv))) == ex.y_true) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(advs.size());
}

double adv_accuracy_snn(const SnnModel& model, const std::vector<AdvExample>& advs,
                        std::uint64_t encode_seed) {
    if (advs.empty()) throw ValueError("accuracy of an empty adversarial set");
    SeededRng root(encode_seed, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < advs.size(); ++i) {
        SeededRng rng = root.child(i);
        const Tensor scores = snn_scores(model, saturate_unit(advs[i].x_adv), rng);
        if (static_cast<int>(argmax(scores)) == advs[i].y_true) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(advs.size());
}

namespace {

std::vector<AdvExample> craft_ann_set(const AnnModel& model, const Dataset& data, AttackConfig cfg,
                                      std::uint64_t seed, std::uint64_t tag, const std::string& id) {
    cfg.seed = derive_seed(seed, kTagCraft + tag) + cfg.seed;
    return ann_adv(data, model, cfg, id);
}

std::vector<AdvExample> craft_snn_set(const SnnModel& model, const Dataset& data, AttackConfig cfg,
                                      std::uint64_t seed, std::uint64_t tag, const std::string& id) {
    cfg.seed = derive_seed(seed, kTagCraft + tag) + cfg.seed;
    SeededRng encode_rng(derive_seed(seed, kTagEncode + tag), 0);
    return snn_adv(data, model, cfg, model.horizon, encode_rng, id);
}

}  // namespace

EvalReport run_matrix(const ModelSet& models, const std::vector<AttackConfig>& attacks,
                      const Dataset& data, std::uint64_t seed) {
    if (data.empty()) throw ValueError("evaluation dataset is empty");
    for (const AttackConfig& cfg : attacks) cfg.validate();

    const double clean_ann = clean_accuracy_ann(models.ann, data);
    const double clean_snn1 = clean_accuracy_snn(models.snn1, data, derive_seed(seed, kTagCleanSnn1));
    const double clean_snn2 = clean_accuracy_snn(models.snn2, data, derive_seed(seed, kTagCleanSnn2));

    EvalReport report;
    for (std::size_t ai = 0; ai < attacks.size(); ++ai) {
        const AttackConfig& cfg = attacks[ai];
        const std::uint64_t at = ai * 16;

        // whitebox sets: each target attacked with itself as the source
        const auto wb_ann = craft_ann_set(models.ann, data, cfg, seed, at + 0, kIdAnn);
        const auto wb_snn1 = craft_snn_set(models.snn1, data, cfg, seed, at + 1, kIdSnn1);
        const auto wb_snn2 = craft_snn_set(models.snn2, data, cfg, seed, at + 2, kIdSnn2);
        // blackbox sets: crafted once from the twin source, shared by all targets
        const auto bb_snn1 = craft_snn_set(models.snn1_x, data, cfg, seed, at + 3, kIdSnn1X);
        const auto bb_snn2 = craft_snn_set(models.snn2_x, data, cfg, seed, at + 4, kIdSnn2X);
        const auto bb_ann = craft_ann_set(models.ann_x, data, cfg, seed, at + 5, kIdAnnX);

        const struct {
            ScenarioKind kind;
            const std::vector<AdvExample>* common;  // null = whitebox (per-target set)
        } scenarios[] = {
            {ScenarioKind::Whitebox, nullptr},
            {ScenarioKind::BbSnn1, &bb_snn1},
            {ScenarioKind::BbSnn2, &bb_snn2},
            {ScenarioKind::BbAnn, &bb_ann},
        };

        for (std::size_t si = 0; si < 4; ++si) {
            const auto& sc = scenarios[si];
            for (int ti = 0; ti < 3; ++ti) {
                const std::uint64_t eval_tag = kTagEval + ai * 64 + si * 8 + static_cast<std::uint64_t>(ti);
                const std::vector<AdvExample>* set = sc.common;
                if (!set) set = ti == 0 ? &wb_ann : (ti == 1 ? &wb_snn1 : &wb_snn2);
                const std::string target_id = ti == 0 ? kIdAnn : (ti == 1 ? kIdSnn1 : kIdSnn2);
                const std::string source_id = set->empty() ? "" : set->front().source_id;
                double clean = ti == 0 ? clean_ann : (ti == 1 ? clean_snn1 : clean_snn2);
                double adv = 0.0;
                switch (ti) {
                    case 0: adv = adv_accuracy_ann(models.ann, *set); break;
                    case 1: adv = adv_accuracy_snn(models.snn1, *set, derive_seed(seed, eval_tag)); break;
                    case 2: adv = adv_accuracy_snn(models.snn2, *set, derive_seed(seed, eval_tag)); break;
                }
                report.rows.push_back(
                    make_row(scenario_name(sc.kind), cfg, source_id, target_id, clean, adv));
            }
        }
    }
    return report;
}

ReportRow run_scenario(const ScenarioKind scenario, const ModelFile& target, const ModelFile& source,
                       const AttackConfig& attack, const Dataset& data, std::uint64_t seed) {
    attack.validate();
    const std::string target_id = target.name.empty() ? "target" : target.name;
    const std::string source_id = source.name.empty() ? "source" : source.name;

    std::vector<AdvExample> set;
    if (source.is_snn()) {
        set = craft_snn_set(source.snn(), data, attack, seed, 0, source_id);
    } else {
        set = craft_ann_set(source.ann(), data, attack, seed, 0, source_id);
    }

    double clean = 0.0, adv = 0.0;
    if (target.is_snn()) {
        clean = clean_accuracy_snn(target.snn(), data, derive_seed(seed, kTagCleanSnn1));
        adv = adv_accuracy_snn(target.snn(), set, derive_seed(seed, kTagEval));
    } else {
        clean = clean_accuracy_ann(target.ann(), data);
        adv = adv_accuracy_ann(target.ann(), set);
    }
    return make_row(scenario_name(scenario), attack, source_id, target_id, clean, adv);
}

ReportRow eval_on_adv_set(const ScenarioKind scenario, const ModelFile& target,
                          const std::string& source_id, const AttackConfig& attack,
                          const Dataset& adv_set, const Dataset& clean_data, std::uint64_t seed) {
    if (adv_set.empty()) throw ValueError("adversarial set is empty");
    const std::string target_id = target.name.empty() ? "target" : target.name;
    double clean = 0.0, adv = 0.0;
    if (target.is_snn()) {
        clean = clean_accuracy_snn(target.snn(), clean_data, derive_seed(seed, kTagCleanSnn1));
        SeededRng root(derive_seed(seed, kTagEval), 0);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < adv_set.size(); ++i) {
            SeededRng rng = root.child(i);
            const Tensor scores = snn_scores(target.snn(), saturate_unit(adv_set[i].x), rng);
            if (static_cast<int>(argmax(scores)) == adv_set[i].label) ++hits;
        }
        adv = static_cast<double>(hits) / static_cast<double>(adv_set.size());
    } else {
        clean = clean_accuracy_ann(target.ann(), clean_data);
        adv = accuracy(target.ann(), adv_set);
    }
    return make_row(scenario_name(scenario), attack, source_id, target_id, clean, adv);
}

std::vector<AttackConfig> preset_attack_grid(std::uint64_t seed) {
    const double eps_grid[] = {8.0 / 255.0, 16.0 / 255.0, 32.0 / 255.0};
    std::vector<AttackConfig> out;
    for (double eps : eps_grid) {
        AttackConfig c;
        c.method = AttackMethod::Fgsm;
        c.epsilon = eps;
        c.steps = 1;
        c.seed = seed;
        out.push_back(c);
    }
    for (double eps : eps_grid) {
        AttackConfig c;
        c.method = AttackMethod::Rfgsm;
        c.epsilon = eps;
        c.alpha = eps / 2.0;
        c.steps = 2;
        c.seed = seed;
        out.push_back(c);
    }
    for (double eps : eps_grid) {
        AttackConfig c;
        c.method = AttackMethod::Ifgsm;
        c.epsilon = eps;
        c.steps = 2;  // alpha = eps / k
        c.seed = seed;
        out.push_back(c);
    }
    for (double eps : eps_grid) {
        AttackConfig c;
        c.method = AttackMethod::Ifgsm;
        c.mode = AttackMode::TargetedRandom;
        c.epsilon = eps;
        c.steps = 2;
        c.seed = seed;
        out.push_back(c);
    }
    return out;
}

Dataset adv_to_dataset(const std::vector<AdvExample>& advs, int num_classes) {
    Dataset ds;
    ds.num_classes = num_classes;
    ds.items.reserve(advs.size());
    for (const AdvExample& ex : advs) {
        Sample s;
        s.x = ex.x_adv;
        s.label = ex.y_true;
        ds.items.push_back(std::move(s));
    }
    return ds;
}

}  // namespace snnadv
