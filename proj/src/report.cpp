#include "latlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace latlab {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

std::string cfrt_report_json(const CfrtReport& report) {
    json j;
    j["metric"] = "cfrt";
    j["attribute"] = attribute_name(report.attribute);
    j["score"] = report.score;
    j["flip_threshold"] = report.flip_threshold;
    j["tau"] = report.tau;
    j["sample_count"] = report.breakdown.size();
    json samples = json::array();
    for (const auto& s : report.breakdown) {
        samples.push_back({{"delta_target", s.delta_target},
                           {"max_other", s.max_other},
                           {"margin_ok", s.margin_ok},
                           {"content_ok", s.content_ok},
                           {"others_ok", s.others_ok},
                           {"indicator", s.indicator}});
    }
    j["samples"] = std::move(samples);
    return j.dump(2) + "\n";
}

std::string cfrt_report_csv(const CfrtReport& report) {
    std::ostringstream os;
    os << "sample,delta_target,max_other,margin_ok,content_ok,others_ok,indicator\n";
    for (size_t i = 0; i < report.breakdown.size(); ++i) {
        const auto& s = report.breakdown[i];
        os << i << "," << format_double(s.delta_target) << "," << format_double(s.max_other) << ","
           << s.margin_ok << "," << s.content_ok << "," << s.others_ok << "," << s.indicator << "\n";
    }
    return os.str();
}

std::string cosine_matrix_csv(const CosineMatrix& m) {
    std::ostringstream os;
    os << "tau";
    for (int tau : m.grid) os << "," << tau;
    os << "\n";
    for (size_t i = 0; i < 9; ++i) {
        os << m.grid[i];
        for (size_t j = 0; j < 9; ++j) {
            os << ",";
            os << (m.defined[i][j] ? format_double(m.value[i][j]) : "nan");
        }
        os << "\n";
    }
    return os.str();
}

std::string perceptual_reports_csv(const std::vector<PerceptualReport>& reports) {
    std::ostringstream os;
    os << "trajectory,attribute,position,feature_perceptual_distance,style_prob\n";
    for (size_t r = 0; r < reports.size(); ++r) {
        const auto& rep = reports[r];
        for (size_t i = 0; i < rep.position.size(); ++i) {
            os << r << "," << attribute_name(rep.style) << "," << format_double(rep.position[i]) << ","
               << format_double(rep.distance[i]) << "," << format_double(rep.style_prob[i]) << "\n";
        }
    }
    return os.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

static std::string svg_header(int width, int height, const std::string& title) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"monospace\" "
          "font-size=\"14\">" << title << "</text>\n";
    return os.str();
}

// Blue (-1) through white (0) to red (+1).
static std::string heat_color(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r = 255, g = 255, b = 255;
    if (v >= 0.0) {
        g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
        b = g;
    } else {
        r = static_cast<int>(std::lround(255.0 * (1.0 + v)));
        g = r;
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return std::string(buf);
}

std::string cosine_heatmap_svg(const CosineMatrix& m, const std::string& title) {
    const int cell = 46, margin = 60, top = 40;
    const int width = margin + 9 * cell + 20, height = top + 9 * cell + 40;
    std::ostringstream os;
    os << svg_header(width, height, title);
    for (size_t i = 0; i < 9; ++i) {
        os << "<text x=\"" << margin - 8 << "\" y=\"" << top + i * cell + cell / 2 + 4
           << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" << m.grid[i] << "</text>\n";
        os << "<text x=\"" << margin + i * cell + cell / 2 << "\" y=\"" << top + 9 * cell + 16
           << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">" << m.grid[i]
           << "</text>\n";
    }
    char label[32];
    for (size_t i = 0; i < 9; ++i) {
        for (size_t j = 0; j < 9; ++j) {
            const int x = margin + static_cast<int>(j) * cell;
            const int y = top + static_cast<int>(i) * cell;
            const std::string fill = m.defined[i][j] ? heat_color(m.value[i][j]) : "#dddddd";
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
               << "\" fill=\"" << fill << "\" stroke=\"#888888\"/>\n";
            if (m.defined[i][j]) {
                std::snprintf(label, sizeof(label), "%.2f", m.value[i][j]);
            } else {
                std::snprintf(label, sizeof(label), "n/a");
            }
            os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
               << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">" << label
               << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string distance_curve_svg(const std::vector<double>& positions,
                               const std::vector<double>& mean_distance, const std::string& title) {
    if (positions.size() != mean_distance.size() || positions.empty()) {
        throw std::invalid_argument("distance_curve_svg: positions and values must align");
    }
    const int width = 480, height = 320, ml = 60, mr = 20, mt = 40, mb = 50;
    const double x0 = *std::min_element(positions.begin(), positions.end());
    const double x1 = *std::max_element(positions.begin(), positions.end());
    double y1 = *std::max_element(mean_distance.begin(), mean_distance.end());
    if (y1 <= 0.0) y1 = 1.0;
    const auto sx = [&](double x) {
        return ml + (x - x0) / std::max(x1 - x0, 1e-12) * (width - ml - mr);
    };
    const auto sy = [&](double y) { return height - mb - y / y1 * (height - mt - mb); };

    std::ostringstream os;
    os << svg_header(width, height, title);
    os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
       << "\" stroke=\"black\"/>\n";
    char buf[32];
    for (size_t i = 0; i < positions.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%g", positions[i]);
        os << "<text x=\"" << sx(positions[i]) << "\" y=\"" << height - mb + 16
           << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">" << buf << "</text>\n";
    }
    std::snprintf(buf, sizeof(buf), "%.3f", y1);
    os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">" << buf << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << height - mb + 4
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">0</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < positions.size(); ++i) {
        os << sx(positions[i]) << "," << sy(mean_distance[i]) << " ";
    }
    os << "\"/>\n";
    for (size_t i = 0; i < positions.size(); ++i) {
        os << "<circle cx=\"" << sx(positions[i]) << "\" cy=\"" << sy(mean_distance[i])
           << "\" r=\"3\" fill=\"#c0392b\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string pca_scatter_svg(const std::vector<ScatterSeries>& series, const std::string& title) {
    const int width = 520, height = 420, ml = 50, mr = 130, mt = 40, mb = 40;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (first) {
                x0 = x1 = x;
                y0 = y1 = y;
                first = false;
            }
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    const auto sx = [&](double x) {
        return ml + (x - x0) / std::max(x1 - x0, 1e-12) * (width - ml - mr);
    };
    const auto sy = [&](double y) {
        return height - mb - (y - y0) / std::max(y1 - y0, 1e-12) * (height - mt - mb);
    };
    static const char* palette[] = {"#2980b9", "#27ae60", "#8e44ad", "#e67e22", "#c0392b", "#16a085"};

    std::ostringstream os;
    os << svg_header(width, height, title);
    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[s].points) os << sx(x) << "," << sy(y) << " ";
        os << "\"/>\n";
        for (const auto& [x, y] : series[s].points) {
            os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color
               << "\"/>\n";
        }
        os << "<text x=\"" << width - mr + 12 << "\" y=\"" << mt + 16 * (s + 1)
           << "\" font-family=\"monospace\" font-size=\"11\" fill=\"" << color << "\">" << series[s].label
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace latlab
