#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tabstack/eval.hpp"
#include "tabstack/explain.hpp"

namespace tabstack::svg {

struct SvgOptions {
  int width = 640;
  int height = 480;
  bool timestamp = true;  // emitted as a comment; suppress for bit-stable output
};

std::string roc_curve_svg(const std::vector<std::pair<double, double>>& points, double auc_value,
                          const SvgOptions& options = {});

std::string calibration_svg(const eval::CalibrationCurve& curve, const SvgOptions& options = {});

std::string beeswarm_svg(const std::vector<explain::BeeswarmPoint>& points,
                         const explain::ShapSummary& summary, int top_k = 15,
                         const SvgOptions& options = {});

void write_svg(const std::string& content, const std::string& path);

}  // namespace tabstack::svg
