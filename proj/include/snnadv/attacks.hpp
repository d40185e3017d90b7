#pragma once

#include <string>
#include <vector>

#include "snnadv/ann.hpp"
#include "snnadv/conversion.hpp"
#include "snnadv/dataset.hpp"
#include "snnadv/snn.hpp"

namespace snnadv {

enum class AttackMethod { Fgsm, Rfgsm, Ifgsm };
enum class AttackMode { NonTargeted, TargetedRandom };

std::string attack_method_name(AttackMethod m);
AttackMethod attack_method_from_name(const std::string& name);

struct AttackConfig {
    AttackMethod method = AttackMethod::Fgsm;
    double epsilon = 8.0 / 255.0;  // L-inf budget, pixel units
    double alpha = 0.0;            // rfgsm noise step / ifgsm step size; 0 = epsilon/steps for ifgsm
    int steps = 1;                 // k
    AttackMode mode = AttackMode::NonTargeted;
    std::uint64_t seed = 0;
    bool domain_clamp = false;     // clamp x_adv into [-1, 1] (off by default)

    void validate() const;
    double step_size() const;  // resolved alpha
    std::string method_label() const;  // "fgsm" | "rfgsm" | "ifgsm" | "ifgsm-targeted"
};

// x is the attack's base input: the clean image for ANN-crafted examples,
// its rate-decoded encoding for SNN-crafted ones. ||x_adv - x||inf <= eps
// holds exactly for every method.
struct AdvExample {
    Tensor x;
    Tensor x_adv;
    int y_true = 0;
    int y_target = -1;  // targeted mode only
    std::string source_id;
    AttackConfig config;
};

// x_adv = x + eps * sign(grad_x J(x, y_true)); no domain clamping.
Tensor fgsm(const AnnModel& model, const Tensor& x, int y_true, double eps);

// x' = x + alpha * sign(N(0, I)); then a single (eps - alpha) FGSM step at x'.
Tensor rfgsm(const AnnModel& model, const Tensor& x, int y_true, double eps, double alpha,
             SeededRng& rng);

// k clipped steps; ascends the loss of y_true in non-targeted mode,
// descends the loss of y_target in targeted mode.
Tensor ifgsm(const AnnModel& model, const Tensor& x, int y_true, const AttackConfig& cfg,
             int y_target = -1);

// Per-element median(x - eps, candidate, x + eps).
Tensor clip_eps(const Tensor& candidate, const Tensor& x, double eps);

// Applies cfg's method to every sample; example i draws from child stream i
// of cfg.seed so results are order-independent and reproducible.
std::vector<AdvExample> ann_adv(const Dataset& data, const AnnModel& model, const AttackConfig& cfg,
                                const std::string& source_id = "");

// Builds the transformed ReLU network from the spiking source, then for each
// sample Poisson-encodes with T steps, rate-decodes to X_rate and runs the
// configured method on X_rate. The budget is relative to X_rate.
std::vector<AdvExample> snn_adv(const Dataset& data, const SnnModel& snn, const AttackConfig& cfg,
                                int T, SeededRng& rng, const std::string& source_id = "");

}  // namespace snnadv
