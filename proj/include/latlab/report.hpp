#pragma once

#include <string>
#include <utility>
#include <vector>

#include "latlab/metrics.hpp"

namespace latlab {

// Flat-table / JSON serializations. Doubles use %.17g so parsed CSV values
// reproduce the in-memory reports exactly.
std::string format_double(double v);

std::string cfrt_report_json(const CfrtReport& report);
std::string cfrt_report_csv(const CfrtReport& report);
std::string cosine_matrix_csv(const CosineMatrix& m);
std::string perceptual_reports_csv(const std::vector<PerceptualReport>& reports);

std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Standalone SVG plots, no rendering dependencies.
std::string cosine_heatmap_svg(const CosineMatrix& m, const std::string& title);
std::string distance_curve_svg(const std::vector<double>& positions,
                               const std::vector<double>& mean_distance, const std::string& title);

struct ScatterSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;   // drawn as a polyline + dots
};
std::string pca_scatter_svg(const std::vector<ScatterSeries>& series, const std::string& title);

} // namespace latlab
