#include "docfsl/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "docfsl/common.hpp"

namespace docfsl {

std::vector<ReportRow> load_report_rows(const std::vector<std::string>& paths) {
    std::vector<ReportRow> rows;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw DataError("report not found: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("invalid report JSON " + path + ": " + e.what());
        }
        if (j.value("schema_version", -1) != 1) {
            throw DataError("report schema_version mismatch in " + path);
        }
        ReportRow row;
        row.backbone = j.at("config").value("backbone", "?");
        row.mode = j.at("config").value("mode", "?");
        row.mean_accuracy = j.at("mean_accuracy").get<double>();
        row.std_accuracy = j.at("std_accuracy").get<double>();
        row.mean_auc = j.at("mean_auc").get<double>();
        row.std_auc = j.at("std_auc").get<double>();
        row.repetitions = static_cast<int>(j.value("per_repetition", nlohmann::json::array()).size());
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string pm(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", mean * 100.0, std * 100.0);
    return buf;
}

std::vector<std::string> sorted_modes(const std::vector<ReportRow>& rows) {
    std::set<std::string> modes;
    for (const auto& r : rows) modes.insert(r.mode);
    // unconditional first, matching the usual table layout
    std::vector<std::string> out;
    if (modes.count("unconditional")) out.push_back("unconditional");
    if (modes.count("conditional")) out.push_back("conditional");
    for (const auto& m : modes) {
        if (m != "unconditional" && m != "conditional") out.push_back(m);
    }
    return out;
}

}  // namespace

std::string render_table_text(const std::vector<ReportRow>& rows) {
    auto modes = sorted_modes(rows);
    std::map<std::string, std::map<std::string, const ReportRow*>> by_backbone;
    for (const auto& r : rows) by_backbone[r.backbone][r.mode] = &r;

    std::ostringstream out;
    out << std::left;
    out.width(18);
    out << "Model";
    for (const auto& m : modes) {
        std::string label = m == "unconditional" ? "U-FSL" : (m == "conditional" ? "C-FSL" : m);
        out.width(22);
        out << (label + " Accuracy");
        out.width(22);
        out << (label + " AUC");
    }
    out << '\n';
    for (const auto& [backbone, cells] : by_backbone) {
        out.width(18);
        out << backbone;
        for (const auto& m : modes) {
            auto it = cells.find(m);
            if (it == cells.end()) {
                out.width(22);
                out << "-";
                out.width(22);
                out << "-";
            } else {
                out.width(22);
                out << pm(it->second->mean_accuracy, it->second->std_accuracy);
                out.width(22);
                out << pm(it->second->mean_auc, it->second->std_auc);
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string render_table_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "backbone,mode,mean_accuracy,std_accuracy,mean_auc,std_auc,repetitions\n";
    for (const auto& r : rows) {
        out << r.backbone << ',' << r.mode << ',' << r.mean_accuracy << ',' << r.std_accuracy
            << ',' << r.mean_auc << ',' << r.std_auc << ',' << r.repetitions << '\n';
    }
    return out.str();
}

void render_metric_plot(const std::string& png_path, const std::vector<ReportRow>& rows,
                        const std::string& metric) {
    if (rows.empty()) throw DataError("render_metric_plot: no rows");
    bool is_acc = metric == "accuracy";
    if (!is_acc && metric != "auc") throw UsageError("metric must be 'accuracy' or 'auc'");

    const int width = 900, height = 520;
    const int margin_l = 70, margin_b = 90, margin_t = 40, margin_r = 20;
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

    auto y_of = [&](double v) {
        return static_cast<int>(height - margin_b - v * (height - margin_t - margin_b));
    };
    // axes + gridlines at 0, 25, 50, 75, 100 percent
    for (int pct = 0; pct <= 100; pct += 25) {
        int y = y_of(pct / 100.0);
        cv::line(canvas, {margin_l, y}, {width - margin_r, y}, cv::Scalar(220, 220, 220), 1);
        cv::putText(canvas, std::to_string(pct), {8, y + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                    cv::Scalar(60, 60, 60), 1);
    }
    cv::line(canvas, {margin_l, margin_t}, {margin_l, height - margin_b}, cv::Scalar(0, 0, 0), 2);
    cv::line(canvas, {margin_l, height - margin_b}, {width - margin_r, height - margin_b},
             cv::Scalar(0, 0, 0), 2);
    cv::putText(canvas, (is_acc ? std::string("Accuracy") : std::string("AUC")) + " (%)",
                {margin_l, margin_t - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.6, cv::Scalar(0, 0, 0), 1);

    const cv::Scalar colors[2] = {cv::Scalar(180, 120, 40), cv::Scalar(60, 70, 200)};
    int n = static_cast<int>(rows.size());
    int slot = (width - margin_l - margin_r) / std::max(n, 1);
    int bar_w = std::max(slot - 24, 8);
    for (int i = 0; i < n; ++i) {
        const auto& r = rows[i];
        double mean = is_acc ? r.mean_accuracy : r.mean_auc;
        double sd = is_acc ? r.std_accuracy : r.std_auc;
        int x0 = margin_l + i * slot + (slot - bar_w) / 2;
        int y_top = y_of(mean);
        const cv::Scalar& col = colors[r.mode == "conditional" ? 1 : 0];
        cv::rectangle(canvas, {x0, y_top}, {x0 + bar_w, height - margin_b}, col, cv::FILLED);
        // error bar
        int cx = x0 + bar_w / 2;
        cv::line(canvas, {cx, y_of(std::min(mean + sd, 1.0))},
                 {cx, y_of(std::max(mean - sd, 0.0))}, cv::Scalar(0, 0, 0), 2);
        std::string label = r.backbone + "/" + (r.mode == "conditional" ? "C" : "U");
        cv::putText(canvas, label, {x0 - 8, height - margin_b + 24}, cv::FONT_HERSHEY_SIMPLEX,
                    0.45, cv::Scalar(0, 0, 0), 1);
        char valbuf[32];
        std::snprintf(valbuf, sizeof(valbuf), "%.1f", mean * 100.0);
        cv::putText(canvas, valbuf, {x0, y_top - 6}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                    cv::Scalar(0, 0, 0), 1);
    }
    if (!cv::imwrite(png_path, canvas)) throw DataError("cannot write plot: " + png_path);
}

}  // namespace docfsl
