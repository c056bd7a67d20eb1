#include "tabstack/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tabstack/errors.hpp"
#include "tabstack/num.hpp"
#include "tabstack/rng.hpp"

namespace tabstack::svg {

namespace {

// Hand-rolled plots from polyline/circle/text primitives; diagnostic output,
// not publication figures.
struct Canvas {
  std::ostringstream out;
  int width, height;
  double margin = 50;

  Canvas(const SvgOptions& options) : width(options.width), height(options.height) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    if (options.timestamp) {
      const auto now = std::chrono::system_clock::now();
      const auto t = std::chrono::system_clock::to_time_t(now);
      out << "<!-- generated: " << t << " -->\n";
    }
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  double sx(double x01) const { return margin + x01 * (width - 2 * margin); }
  double sy(double y01) const { return height - margin - y01 * (height - 2 * margin); }

  void axes(const std::string& x_label, const std::string& y_label) {
    out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1) << "\" y2=\""
        << sy(0) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(0) << "\" y2=\""
        << sy(1) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double v = i / 5.0;
      out << "<text x=\"" << sx(v) << "\" y=\"" << sy(0) + 18 << "\" font-size=\"10\" "
          << "text-anchor=\"middle\">" << format_fixed(v, 1) << "</text>\n";
      out << "<text x=\"" << sx(0) - 8 << "\" y=\"" << sy(v) + 4 << "\" font-size=\"10\" "
          << "text-anchor=\"end\">" << format_fixed(v, 1) << "</text>\n";
    }
    out << "<text x=\"" << sx(0.5) << "\" y=\"" << height - 8 << "\" font-size=\"12\" "
        << "text-anchor=\"middle\">" << x_label << "</text>\n";
    out << "<text x=\"14\" y=\"" << sy(0.5) << "\" font-size=\"12\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 14 " << sy(0.5) << ")\">" << y_label << "</text>\n";
  }

  void diagonal_dashed() {
    out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1) << "\" y2=\""
        << sy(1) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) out << sx(x) << "," << sy(y) << " ";
    out << "\"/>\n";
  }

  void circle(double x01, double y01, double radius, const std::string& color) {
    out << "<circle cx=\"" << sx(x01) << "\" cy=\"" << sy(y01) << "\" r=\"" << radius
        << "\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
  }

  void title(const std::string& text) {
    out << "<text x=\"" << width / 2 << "\" y=\"20\" font-size=\"13\" "
        << "text-anchor=\"middle\">" << text << "</text>\n";
  }

  std::string finish() {
    out << "</svg>\n";
    return out.str();
  }
};

}  // namespace

std::string roc_curve_svg(const std::vector<std::pair<double, double>>& points,
                          double auc_value, const SvgOptions& options) {
  Canvas canvas(options);
  canvas.title("ROC curve (AUC = " + format_fixed(auc_value, 3) + ")");
  canvas.axes("false positive rate", "true positive rate");
  canvas.diagonal_dashed();
  canvas.polyline(points, "#3366cc");
  return canvas.finish();
}

std::string calibration_svg(const eval::CalibrationCurve& curve, const SvgOptions& options) {
  Canvas canvas(options);
  canvas.title("Calibration curve");
  canvas.axes("mean predicted probability", "observed event fraction");
  canvas.diagonal_dashed();
  std::vector<std::pair<double, double>> pts;
  for (const auto& bin : curve.bins) pts.emplace_back(bin.mean_predicted, bin.event_fraction);
  canvas.polyline(pts, "#cc3333");
  for (const auto& [x, y] : pts) canvas.circle(x, y, 3.5, "#cc3333");
  return canvas.finish();
}

std::string beeswarm_svg(const std::vector<explain::BeeswarmPoint>& points,
                         const explain::ShapSummary& summary, int top_k,
                         const SvgOptions& options) {
  Canvas canvas(options);
  canvas.title("SHAP summary (top " + std::to_string(top_k) + ")");
  const int shown = std::min<int>(top_k, static_cast<int>(summary.rows.size()));

  double max_abs = 1e-12;
  for (const auto& pt : points)
    if (pt.feature_rank >= 1 && pt.feature_rank <= shown)
      max_abs = std::max(max_abs, std::abs(pt.phi));

  // one horizontal lane per feature, rank 1 on top; jitter from a fixed seed
  Rng rng(7);
  for (const auto& pt : points) {
    if (pt.feature_rank < 1 || pt.feature_rank > shown) continue;
    const double lane = (static_cast<double>(pt.feature_rank) - 0.5) / shown;
    const double y = 1.0 - lane + (rng.uniform01() - 0.5) * 0.5 / shown;
    const double x = 0.5 + 0.5 * pt.phi / max_abs;
    // blue = low feature value, red = high
    const int red = static_cast<int>(60 + 180 * pt.normalized_value);
    const int blue = static_cast<int>(240 - 180 * pt.normalized_value);
    std::ostringstream color;
    color << "rgb(" << red << ",80," << blue << ")";
    canvas.circle(x, y, 2.0, color.str());
  }
  canvas.out << "<line x1=\"" << canvas.sx(0.5) << "\" y1=\"" << canvas.sy(0) << "\" x2=\""
             << canvas.sx(0.5) << "\" y2=\"" << canvas.sy(1) << "\" stroke=\"gray\" "
             << "stroke-dasharray=\"4 4\"/>\n";
  for (int rank = 1; rank <= shown; ++rank) {
    const double lane = 1.0 - (static_cast<double>(rank) - 0.5) / shown;
    canvas.out << "<text x=\"" << canvas.sx(0) - 6 << "\" y=\"" << canvas.sy(lane) + 3
               << "\" font-size=\"9\" text-anchor=\"end\">"
               << summary.rows[static_cast<std::size_t>(rank - 1)].feature << "</text>\n";
  }
  canvas.out << "<text x=\"" << canvas.sx(0.5) << "\" y=\"" << canvas.height - 8
             << "\" font-size=\"12\" text-anchor=\"middle\">SHAP value (impact on "
             << "prediction)</text>\n";
  return canvas.finish();
}

void write_svg(const std::string& content, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write SVG: " + path);
  out << content;
}

}  // namespace tabstack::svg
