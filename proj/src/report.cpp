#include "snnadv/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace snnadv {

namespace {

constexpr const char* kHeader = "scenario,method,epsilon,steps,source,target,clean_acc,adv_acc,acc_loss";

std::string f4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

ReportFormat report_format_from_name(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw ValueError("unknown report format: " + name);
}

std::string report_to_csv(const EvalReport& report) {
    std::string out = kHeader;
    out += '\n';
    for (const ReportRow& r : report.rows) {
        out += r.scenario;
        out += ',';
        out += r.method;
        out += ',';
        out += f4(r.epsilon);
        out += ',';
        out += std::to_string(r.steps);
        out += ',';
        out += r.source;
        out += ',';
        out += r.target;
        out += ',';
        out += f4(r.clean_acc);
        out += ',';
        out += f4(r.adv_acc);
        out += ',';
        out += f4(r.acc_loss);
        out += '\n';
    }
    return out;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ReportRow& r : report.rows) {
        nlohmann::json j;
        j["scenario"] = r.scenario;
        j["method"] = r.method;
        j["epsilon"] = r.epsilon;
        j["steps"] = r.steps;
        j["source"] = r.source;
        j["target"] = r.target;
        j["clean_acc"] = r.clean_acc;
        j["adv_acc"] = r.adv_acc;
        j["acc_loss"] = r.acc_loss;
        rows.push_back(j);
    }
    nlohmann::json doc;
    doc["rows"] = rows;
    return doc.dump(2) + "\n";
}

void emit_report(const EvalReport& report, const std::string& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    const std::string text = format == ReportFormat::Csv ? report_to_csv(report) : report_to_json(report);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed for " + path);
}

EvalReport report_from_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    EvalReport report;
    bool first = true;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        if (first) {
            if (line != kHeader) throw FormatError("unexpected CSV header: " + line);
            first = false;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 9) throw FormatError("CSV row has " + std::to_string(fields.size()) + " fields");
        ReportRow r;
        r.scenario = fields[0];
        r.method = fields[1];
        r.epsilon = std::stod(fields[2]);
        r.steps = std::stoi(fields[3]);
        r.source = fields[4];
        r.target = fields[5];
        r.clean_acc = std::stod(fields[6]);
        r.adv_acc = std::stod(fields[7]);
        r.acc_loss = r.clean_acc - r.adv_acc;
        report.rows.push_back(std::move(r));
    }
    if (first) throw FormatError("CSV report has no header");
    return report;
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad report JSON: ") + e.what());
    }
    EvalReport report;
    for (const auto& j : doc.at("rows")) {
        ReportRow r;
        r.scenario = j.at("scenario").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.epsilon = j.at("epsilon").get<double>();
        r.steps = j.at("steps").get<int>();
        r.source = j.at("source").get<std::string>();
        r.target = j.at("target").get<std::string>();
        r.clean_acc = j.at("clean_acc").get<double>();
        r.adv_acc = j.at("adv_acc").get<double>();
        r.acc_loss = r.clean_acc - r.adv_acc;
        report.rows.push_back(std::move(r));
    }
    return report;
}

EvalReport load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (char c : text) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') continue;
        return c == '{' || c == '[' ? report_from_json(text) : report_from_csv(text);
    }
    throw FormatError(path + ": empty report file");
}

}  // namespace snnadv
