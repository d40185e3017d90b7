#pragma once

#include <string>
#include <vector>

#include "snnadv/error.hpp"

namespace snnadv {

enum class ReportFormat { Csv, Json };

ReportFormat report_format_from_name(const std::string& name);

struct ReportRow {
    std::string scenario;  // whitebox | bb-snn1 | bb-snn2 | bb-ann
    std::string method;    // fgsm | rfgsm | ifgsm | ifgsm-targeted
    double epsilon = 0.0;
    int steps = 1;
    std::string source;
    std::string target;
    double clean_acc = 0.0;
    double adv_acc = 0.0;
    double acc_loss = 0.0;  // always clean_acc - adv_acc

    bool operator==(const ReportRow&) const = default;
};

struct EvalReport {
    std::vector<ReportRow> rows;
    bool operator==(const EvalReport&) const = default;
};

// CSV surface: fixed header, stable row order, floats at 4 decimal places,
// '\n' newlines. Identical reports serialize to identical bytes.
std::string report_to_csv(const EvalReport& report);
// JSON surface: accuracies are stored pre-quantized to 4 decimals by the
// harness, epsilon is echoed at full precision; round-trips exactly.
std::string report_to_json(const EvalReport& report);

void emit_report(const EvalReport& report, const std::string& path, ReportFormat format);

EvalReport report_from_csv(const std::string& text);
EvalReport report_from_json(const std::string& text);
EvalReport load_report(const std::string& path);  // dispatches on the leading byte

}  // namespace snnadv
