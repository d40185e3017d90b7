#pragma once

#include <string>
#include <vector>

#include "snnadv/attacks.hpp"
#include "snnadv/dataset.hpp"
#include "snnadv/model_io.hpp"
#include "snnadv/report.hpp"

namespace snnadv {

// Fixed model identifiers of the comparison matrix. The x-suffixed twins
// share the architecture but were initialized from a different seed; they
// serve as blackbox sources only.
inline constexpr const char* kIdAnn = "M_ANN";
inline constexpr const char* kIdAnnX = "M_ANNx";
inline constexpr const char* kIdSnn1 = "M_SNN1";
inline constexpr const char* kIdSnn1X = "M_SNN1x";
inline constexpr const char* kIdSnn2 = "M_SNN2";
inline constexpr const char* kIdSnn2X = "M_SNN2x";

enum class ScenarioKind { Whitebox, BbSnn1, BbSnn2, BbAnn };

std::string scenario_name(ScenarioKind s);
ScenarioKind scenario_from_name(const std::string& name);

// A single cell of the evaluation matrix.
struct ScenarioSpec {
    ScenarioKind scenario = ScenarioKind::Whitebox;
    std::string target;  // model id or file path, caller-defined
    std::string source;
    AttackConfig attack;
};

struct ModelSet {
    AnnModel ann;
    AnnModel ann_x;
    SnnModel snn1;
    SnnModel snn1_x;
    SnnModel snn2;
    SnnModel snn2_x;
};

// Deterministic sub-seed derivation used throughout the harness.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

// A target's accuracy on the unperturbed dataset. Spiking targets encode
// sample i with child stream i of derive_seed(seed, target-specific tag).
double clean_accuracy_ann(const AnnModel& model, const Dataset& data);
double clean_accuracy_snn(const SnnModel& model, const Dataset& data, std::uint64_t encode_seed);

// Accuracy on crafted examples. Spiking targets re-encode x_adv through a
// fresh seeded Poisson stream, saturating |x| at 1 first (a perturbed rate
// can leave the encodable range by up to epsilon).
double adv_accuracy_ann(const AnnModel& model, const std::vector<AdvExample>& advs);
double adv_accuracy_snn(const SnnModel& model, const std::vector<AdvExample>& advs,
                        std::uint64_t encode_seed);

// One full Table-style grid: for every attack config, 4 scenarios x 3
// targets. Blackbox adversarial sets are crafted once per source and reused
// across all three targets. Byte-deterministic for a fixed seed.
EvalReport run_matrix(const ModelSet& models, const std::vector<AttackConfig>& attacks,
                      const Dataset& data, std::uint64_t seed);

// One (scenario, target, source, attack) cell.
ReportRow run_scenario(const ScenarioKind scenario, const ModelFile& target, const ModelFile& source,
                       const AttackConfig& attack, const Dataset& data, std::uint64_t seed);

// Evaluate a target on a pre-crafted adversarial set (e.g. loaded from a
// dataset container written by the craft command).
ReportRow eval_on_adv_set(const ScenarioKind scenario, const ModelFile& target,
                          const std::string& source_id, const AttackConfig& attack,
                          const Dataset& adv_set, const Dataset& clean_data, std::uint64_t seed);

// The preset grid: fgsm / rfgsm / 2-step ifgsm at eps in {8,16,32}/255 plus
// the targeted 2-step ifgsm variant.
std::vector<AttackConfig> preset_attack_grid(std::uint64_t seed);

// Turns crafted examples into the dataset container layout (x_adv + y_true).
Dataset adv_to_dataset(const std::vector<AdvExample>& advs, int num_classes);

}  // namespace snnadv
