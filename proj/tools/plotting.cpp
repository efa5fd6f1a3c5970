// Copyright 2026 The fskill authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "plotting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "fskill/common.hpp"

namespace fskill::plot {
namespace {

constexpr int kWidth = 860;
constexpr int kPanelHeight = 250;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 18;
constexpr int kMarginTop = 30;
constexpr int kMarginBottom = 42;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

/// Fixed two-decimal pixel coordinates; deterministic and compact.
std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();

  void add(double v) {
    if (!std::isfinite(v)) {
      return;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  /// Pads degenerate or empty ranges so the mapping stays invertible.
  void finalize() {
    if (!valid()) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-6, std::abs(lo) * 0.1);
      lo -= pad;
      hi += pad;
    }
  }
};

/// 1-2-5 tick spacing aiming for about `target` intervals.
double nice_step(double span, int target) {
  const double raw = span / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm < 1.5) {
    step = 1.0;
  } else if (norm < 3.5) {
    step = 2.0;
  } else if (norm < 7.5) {
    step = 5.0;
  }
  return step * mag;
}

std::vector<double> ticks(const Range& r, int target) {
  const double step = nice_step(r.hi - r.lo, target);
  std::vector<double> out;
  double t = std::ceil(r.lo / step) * step;
  for (; t <= r.hi + 0.5 * step; t += step) {
    // Snap values that are zero up to rounding so labels read "0".
    out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return out;
}

/// Short human label for tick values; %g is locale-independent for C.
std::string tick_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void render_panel(std::string& svg, const Panel& panel, int top) {
  const double x0 = kMarginLeft;
  const double x1 = kWidth - kMarginRight;
  const double y0 = top + kMarginTop;
  const double y1 = top + kPanelHeight - kMarginBottom;

  Range rx;
  Range ry;
  for (const Series& s : panel.series) {
    for (double v : s.x) {
      rx.add(v);
    }
    for (double v : s.y) {
      ry.add(v);
    }
  }
  for (const Marker& m : panel.markers) {
    rx.add(m.x);
  }
  rx.finalize();
  ry.finalize();

  const auto map_x = [&](double v) {
    return x0 + (v - rx.lo) / (rx.hi - rx.lo) * (x1 - x0);
  };
  const auto map_y = [&](double v) {
    return y1 - (v - ry.lo) / (ry.hi - ry.lo) * (y1 - y0);
  };

  svg += "<rect x=\"" + px(x0) + "\" y=\"" + px(y0) + "\" width=\"" +
         px(x1 - x0) + "\" height=\"" + px(y1 - y0) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + px(x0) + "\" y=\"" + px(y0 - 10) +
         "\" font-size=\"13\" fill=\"#111111\">" + escape_xml(panel.title) +
         "</text>\n";

  for (double t : ticks(rx, 6)) {
    const double gx = map_x(t);
    svg += "<line x1=\"" + px(gx) + "\" y1=\"" + px(y0) + "\" x2=\"" + px(gx) +
           "\" y2=\"" + px(y1) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg += "<text x=\"" + px(gx) + "\" y=\"" + px(y1 + 16) +
           "\" font-size=\"10\" fill=\"#444444\" text-anchor=\"middle\">" +
           tick_label(t) + "</text>\n";
  }
  for (double t : ticks(ry, 5)) {
    const double gy = map_y(t);
    svg += "<line x1=\"" + px(x0) + "\" y1=\"" + px(gy) + "\" x2=\"" + px(x1) +
           "\" y2=\"" + px(gy) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg += "<text x=\"" + px(x0 - 6) + "\" y=\"" + px(gy + 3) +
           "\" font-size=\"10\" fill=\"#444444\" text-anchor=\"end\">" +
           tick_label(t) + "</text>\n";
  }
  svg += "<text x=\"" + px(0.5 * (x0 + x1)) + "\" y=\"" + px(y1 + 32) +
         "\" font-size=\"11\" fill=\"#111111\" text-anchor=\"middle\">" +
         escape_xml(panel.x_label) + "</text>\n";
  svg += "<text x=\"" + px(x0 - 52) + "\" y=\"" + px(0.5 * (y0 + y1)) +
         "\" font-size=\"11\" fill=\"#111111\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 " +
         px(x0 - 52) + " " + px(0.5 * (y0 + y1)) + ")\">" +
         escape_xml(panel.y_label) + "</text>\n";

  for (std::size_t si = 0; si < panel.series.size(); ++si) {
    const Series& s = panel.series[si];
    if (s.x.empty()) {
      continue;
    }
    const char* color = kPalette[si % kPaletteSize];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.step && i > 0) {
        points += px(map_x(s.x[i])) + "," + px(map_y(s.y[i - 1])) + " ";
      }
      points += px(map_x(s.x[i])) + "," + px(map_y(s.y[i]));
      if (i + 1 < s.x.size()) {
        points += " ";
      }
    }
    svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.4\"";
    if (s.dashed) {
      svg += " stroke-dasharray=\"5,3\"";
    }
    svg += "/>\n";

    const double lx = x1 - 150.0;
    const double ly = y0 + 14.0 + 14.0 * static_cast<double>(si);
    svg += "<line x1=\"" + px(lx) + "\" y1=\"" + px(ly - 3) + "\" x2=\"" +
           px(lx + 18) + "\" y2=\"" + px(ly - 3) + "\" stroke=\"" + color +
           "\" stroke-width=\"1.4\"";
    if (s.dashed) {
      svg += " stroke-dasharray=\"5,3\"";
    }
    svg += "/>\n";
    svg += "<text x=\"" + px(lx + 23) + "\" y=\"" + px(ly) +
           "\" font-size=\"10\" fill=\"#111111\">" + escape_xml(s.label) +
           "</text>\n";
  }

  for (const Marker& m : panel.markers) {
    const double gx = map_x(m.x);
    svg += "<line x1=\"" + px(gx) + "\" y1=\"" + px(y0) + "\" x2=\"" + px(gx) +
           "\" y2=\"" + px(y1) +
           "\" stroke=\"#cc0000\" stroke-width=\"1\" "
           "stroke-dasharray=\"2,3\"/>\n";
    if (!m.label.empty()) {
      svg += "<text x=\"" + px(gx + 3) + "\" y=\"" + px(y0 + 10) +
             "\" font-size=\"9\" fill=\"#cc0000\">" + escape_xml(m.label) +
             "</text>\n";
    }
  }
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels) {
  const int height = kPanelHeight * static_cast<int>(panels.size());
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kWidth) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
         std::to_string(height) +
         "\" font-family=\"DejaVu Sans, sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    render_panel(svg, panels[i], kPanelHeight * static_cast<int>(i));
  }
  svg += "</svg>\n";
  return svg;
}

// Labels are generated in this file; keep the CSV a plain four-column
// table by swapping any comma for a semicolon instead of quoting.
std::string csv_field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n') c = ';';
  }
  return s;
}

std::string render_csv(const std::vector<Panel>& panels) {
  std::string csv = "panel,series,x,y\n";
  for (const Panel& panel : panels) {
    for (const Series& s : panel.series) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        csv += csv_field(panel.title) + "," + csv_field(s.label) + ",";
        append_double(csv, s.x[i]);
        csv += ",";
        append_double(csv, s.y[i]);
        csv += "\n";
      }
    }
  }
  return csv;
}

std::vector<Panel> overlay_panels(const Geometry& geom,
                                  const Demonstration& demo,
                                  const ExecutionLog& log, int axis) {
  if (axis < 0 || axis >= geom.tangent_dim()) {
    throw Error("plot axis out of range for geometry " + geom.name());
  }
  Panel pos;
  pos.title = "position axis " + std::to_string(axis);
  pos.x_label = "time [s]";
  pos.y_label = "position [m]";
  Series demo_pos{.label = "demonstration"};
  for (const ObservationPoint& p : demo.points) {
    demo_pos.x.push_back(p.time);
    demo_pos.y.push_back(p.x[axis]);
  }
  Series ref{.label = "attractor reference"};
  ref.dashed = true;
  Series exec{.label = "execution"};
  for (const ExecutionTick& t : log.ticks) {
    ref.x.push_back(t.time);
    ref.y.push_back(t.reference[axis]);
    exec.x.push_back(t.time);
    exec.y.push_back(t.x[axis]);
  }
  pos.series = {demo_pos, ref, exec};

  Panel force;
  force.title = "sensed force axis " + std::to_string(axis);
  force.x_label = "time [s]";
  force.y_label = "force [N]";
  Series demo_f{.label = "demonstration"};
  for (const ObservationPoint& p : demo.points) {
    demo_f.x.push_back(p.time);
    demo_f.y.push_back(p.wrench[axis]);
  }
  Series exec_f{.label = "execution"};
  for (const ExecutionTick& t : log.ticks) {
    exec_f.x.push_back(t.time);
    exec_f.y.push_back(t.wrench[axis]);
  }
  force.series = {demo_f, exec_f};

  for (const ReplanEvent& e : log.events) {
    pos.markers.push_back({e.time, "replan"});
    force.markers.push_back({e.time, ""});
  }
  return {pos, force};
}

std::vector<Panel> stiffness_panels(const SkillModel& model) {
  const int K = model.components();
  const int dim = model.damping.rows();
  Panel panel;
  panel.title = "optimized stiffness profile (" + model.name + ")";
  panel.x_label = "nominal schedule [samples]";
  panel.y_label = "stiffness [N/m]";
  static const char* const kPoseAxes[] = {"x", "y", "z", "rx", "ry", "rz"};
  for (int d = 0; d < dim; ++d) {
    Series s;
    s.label = dim == 6 ? kPoseAxes[d] : "dim " + std::to_string(d);
    s.step = true;
    double t = 0.0;
    for (int k = 0; k < K; ++k) {
      s.x.push_back(t);
      s.y.push_back(model.stiffness.gains[k](d, d));
      t += std::max(1.0, std::round(model.attractor.durations[k].mean));
    }
    s.x.push_back(t);
    s.y.push_back(model.stiffness.gains[K - 1](d, d));
    panel.series.push_back(std::move(s));
  }
  return {panel};
}

std::vector<Panel> timeline_panels(const Geometry& geom,
                                   const ExecutionLog& log) {
  Panel err;
  err.title = "tracking deviation";
  err.x_label = "time [s]";
  err.y_label = "||log_x(y*)|| [m]";
  Panel wrench;
  wrench.title = "sensed force magnitude";
  wrench.x_label = "time [s]";
  wrench.y_label = "force [N]";
  Panel comp;
  comp.title = "active component";
  comp.x_label = "time [s]";
  comp.y_label = "component id";

  Series err_s{.label = "deviation"};
  Series wrench_s{.label = "force"};
  Series comp_s{.label = "component"};
  comp_s.step = true;
  for (const ExecutionTick& t : log.ticks) {
    err_s.x.push_back(t.time);
    err_s.y.push_back(geom.log(t.reference, t.x).norm());
    wrench_s.x.push_back(t.time);
    wrench_s.y.push_back(
        t.wrench.head(std::min<Eigen::Index>(3, t.wrench.size())).norm());
    comp_s.x.push_back(t.time);
    comp_s.y.push_back(t.component);
  }
  err.series = {err_s};
  wrench.series = {wrench_s};
  comp.series = {comp_s};
  for (const ReplanEvent& e : log.events) {
    err.markers.push_back({e.time, e.reason});
    wrench.markers.push_back({e.time, ""});
    comp.markers.push_back({e.time, ""});
  }
  return {err, wrench, comp};
}

}  // namespace fskill::plot
