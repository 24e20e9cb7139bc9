#pragma once

#include <string>
#include <vector>

namespace docfsl {

// One summary row per run: a (backbone, mode) cell with mean +/- std scores.
struct ReportRow {
    std::string backbone;
    std::string mode;  // "conditional" / "unconditional"
    double mean_accuracy = 0.0, std_accuracy = 0.0;
    double mean_auc = 0.0, std_auc = 0.0;
    int repetitions = 0;
};

// Reads run summary JSONs (run_report_to_json output).
std::vector<ReportRow> load_report_rows(const std::vector<std::string>& paths);

// Backbone rows, mode column groups, "mean ± std" cells in percent.
std::string render_table_text(const std::vector<ReportRow>& rows);
std::string render_table_csv(const std::vector<ReportRow>& rows);

// Grouped bar chart with error bars; metric is "accuracy" or "auc".
void render_metric_plot(const std::string& png_path, const std::vector<ReportRow>& rows,
                        const std::string& metric);

}  // namespace docfsl
