#pragma once

#include <optional>
#include <string>
#include <variant>

#include "snnadv/ann.hpp"
#include "snnadv/conversion.hpp"
#include "snnadv/snn.hpp"

namespace snnadv {

// On-disk model: versioned container with a JSON architecture manifest,
// row-major little-endian float64 weight payload (thresholds included) and
// a checksum. Round-trips bit-for-bit.
struct ModelFile {
    std::string name;
    std::variant<AnnModel, SnnModel> model;
    std::optional<BalanceReport> balance;  // converted models only

    bool is_snn() const { return std::holds_alternative<SnnModel>(model); }
    const AnnModel& ann() const;
    const SnnModel& snn() const;
};

void save_model(const ModelFile& file, const std::string& path);
ModelFile load_model(const std::string& path);

void save_ann(const AnnModel& model, const std::string& path, const std::string& name = "");
void save_snn(const SnnModel& model, const std::string& path, const std::string& name = "",
              const BalanceReport* balance = nullptr);

}  // namespace snnadv
