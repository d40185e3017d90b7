#include "snnadv/attacks.hpp"

#include <cmath>

namespace snnadv {

std::string attack_method_name(AttackMethod m) {
    switch (m) {
        case AttackMethod::Fgsm: return "fgsm";
        case AttackMethod::Rfgsm: return "rfgsm";
        case AttackMethod::Ifgsm: return "ifgsm";
    }
    return "?";
}

AttackMethod attack_method_from_name(const std::string& name) {
    if (name == "fgsm") return AttackMethod::Fgsm;
    if (name == "rfgsm") return AttackMethod::Rfgsm;
    if (name == "ifgsm") return AttackMethod::Ifgsm;
    throw ValueError("unknown attack method: " + name);
}

void AttackConfig::validate() const {
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon must be in [0, 1]");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    switch (method) {
        case AttackMethod::Fgsm:
            if (steps != 1) throw ConfigError("fgsm is single-step (k must be 1)");
            break;
        case AttackMethod::Rfgsm:
            if (!(alpha >= 0.0 && alpha < epsilon) && epsilon > 0.0) {
                throw ConfigError("rfgsm requires 0 <= alpha < epsilon");
            }
            if (epsilon == 0.0 && alpha != 0.0) throw ConfigError("rfgsm requires alpha < epsilon");
            break;
        case AttackMethod::Ifgsm:
            if (alpha != 0.0 && alpha * static_cast<double>(steps) < epsilon) {
                throw ConfigError("ifgsm requires alpha >= epsilon / k");
            }
            break;
    }
    if (mode == AttackMode::TargetedRandom && method != AttackMethod::Ifgsm) {
        throw ConfigError("targeted mode is only defined for ifgsm");
    }
}

double AttackConfig::step_size() const {
    if (method == AttackMethod::Ifgsm && alpha == 0.0) {
        return epsilon / static_cast<double>(steps);
    }
    return alpha;
}

std::string AttackConfig::method_label() const {
    std::string label = attack_method_name(method);
    if (mode == AttackMode::TargetedRandom) label += "-targeted";
    return label;
}

namespace {

// Nudges v toward x until the computed |v - x| fits the budget; the raw
// x + delta can land one ulp outside it. Elements with delta == 0 keep
// x bit-for-bit.
double banded(double x, double v, double eps) {
    while (std::fabs(v - x) > eps) v = std::nextafter(v, x);
    return v;
}

Tensor perturb(const Tensor& x, const Tensor& delta, double eps) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = delta[i] == 0.0 ? x[i] : banded(x[i], x[i] + delta[i], eps);
    }
    return out;
}

Tensor grad_sign(const AnnModel& model, const Tensor& x, int label) {
    return sign(loss_and_grads(model, x, label, Mode::Eval).input);
}

Tensor finish(const Tensor& x, Tensor adv, double eps, bool domain_clamp) {
    for (std::size_t i = 0; i < adv.size(); ++i) {
        double v = adv[i];
        if (domain_clamp) v = std::min(std::max(v, -1.0), 1.0);
        adv[i] = v == x[i] ? x[i] : banded(x[i], v, eps);
    }
    return adv;
}

}  // namespace

Tensor clip_eps(const Tensor& candidate, const Tensor& x, double eps) {
    check_same_shape(candidate, x, "clip_eps");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lo = x[i] - eps;
        const double hi = x[i] + eps;
        const double v = std::min(std::max(candidate[i], lo), hi);
        out[i] = v == x[i] ? x[i] : banded(x[i], v, eps);
    }
    return out;
}

Tensor fgsm(const AnnModel& model, const Tensor& x, int y_true, double eps) {
    if (eps < 0.0) throw ConfigError("epsilon must be >= 0");
    const Tensor delta = mul(grad_sign(model, x, y_true), eps);
    return perturb(x, delta, eps);
}

Tensor rfgsm(const AnnModel& model, const Tensor& x, int y_true, double eps, double alpha,
             SeededRng& rng) {
    if (alpha < 0.0 || (alpha >= eps && eps > 0.0) || (eps == 0.0 && alpha != 0.0)) {
        throw ConfigError("rfgsm requires 0 <= alpha < epsilon");
    }
    const Tensor noise_step = mul(sign(rng_gaussian(rng, x.shape())), alpha);
    const Tensor x_noisy = perturb(x, noise_step, alpha);
    const Tensor grad_step = mul(grad_sign(model, x_noisy, y_true), eps - alpha);
    Tensor adv = perturb(x_noisy, grad_step, eps - alpha);
    return finish(x, std::move(adv), eps, false);
}

Tensor ifgsm(const AnnModel& model, const Tensor& x, int y_true, const AttackConfig& cfg,
             int y_target) {
    cfg.validate();
    const bool targeted = cfg.mode == AttackMode::TargetedRandom;
    if (targeted) {
        if (y_target < 0) throw ConfigError("targeted ifgsm needs a target label");
        if (y_target == y_true) throw ConfigError("target label equals the true label");
    }
    const double alpha = cfg.step_size();
    const int label = targeted ? y_target : y_true;
    const double dir = targeted ? -1.0 : 1.0;

    Tensor adv = x;
    for (int n = 0; n < cfg.steps; ++n) {
        const Tensor delta = mul(grad_sign(model, adv, label), dir * alpha);
        Tensor cand(adv.shape());
        for (std::size_t i = 0; i < adv.size(); ++i) {
            cand[i] = delta[i] == 0.0 ? adv[i] : adv[i] + delta[i];
        }
        adv = clip_eps(cand, x, cfg.epsilon);
    }
    return finish(x, std::move(adv), cfg.epsilon, cfg.domain_clamp);
}

namespace {

AdvExample craft_one(const AnnModel& model, Tensor base, int y_true, const AttackConfig& cfg,
                     SeededRng sample_rng, const std::string& source_id, int num_classes) {
    AdvExample ex;
    ex.y_true = y_true;
    ex.source_id = source_id;
    ex.config = cfg;
    switch (cfg.method) {
        case AttackMethod::Fgsm: {
            Tensor adv = fgsm(model, base, y_true, cfg.epsilon);
            ex.x_adv = finish(base, std::move(adv), cfg.epsilon, cfg.domain_clamp);
            break;
        }
        case AttackMethod::Rfgsm: {
            Tensor adv = rfgsm(model, base, y_true, cfg.epsilon, cfg.alpha, sample_rng);
            ex.x_adv = finish(base, std::move(adv), cfg.epsilon, cfg.domain_clamp);
            break;
        }
        case AttackMethod::Ifgsm: {
            int y_target = -1;
            if (cfg.mode == AttackMode::TargetedRandom) {
                const std::uint64_t draw =
                    sample_rng.next_below(static_cast<std::uint64_t>(num_classes - 1));
                y_target = static_cast<int>(draw) >= y_true ? static_cast<int>(draw) + 1
                                                            : static_cast<int>(draw);
                ex.y_target = y_target;
            }
            ex.x_adv = ifgsm(model, base, y_true, cfg, y_target);
            break;
        }
    }
    ex.x = std::move(base);
    return ex;
}

}  // namespace

std::vector<AdvExample> ann_adv(const Dataset& data, const AnnModel& model, const AttackConfig& cfg,
                                const std::string& source_id) {
    cfg.validate();
    const int classes = model.num_classes();
    SeededRng root(cfg.seed, 0x61747461ull);  // attack stream family
    std::vector<AdvExample> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back(craft_one(model, data[i].x, data[i].label, cfg, root.child(i), source_id,
                                classes));
    }
    return out;
}

std::vector<AdvExample> snn_adv(const Dataset& data, const SnnModel& snn, const AttackConfig& cfg,
                                int T, SeededRng& rng, const std::string& source_id) {
    cfg.validate();
    if (T < 1) throw ConfigError("encoding horizon T must be >= 1");
    const AnnModel transformed = build_transformed_ann(snn);
    const int classes = transformed.num_classes();
    SeededRng attack_root(cfg.seed, 0x61747461ull);
    std::vector<AdvExample> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        SeededRng encode_rng = rng.child(i);
        const SpikeTrain train = poisson_encode(data[i].x, T, encode_rng);
        Tensor x_rate = rate_decode(train);
        out.push_back(craft_one(transformed, std::move(x_rate), data[i].label, cfg,
                                attack_root.child(i), source_id, classes));
    }
    return out;
}

}  // namespace snnadv
