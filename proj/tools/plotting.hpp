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

#pragma once

#include <string>
#include <vector>

#include "fskill/demo.hpp"
#include "fskill/execution.hpp"
#include "fskill/skill_model.hpp"

namespace fskill::plot {

/// One polyline. Step series hold each y until the next x, the right
/// rendering for per-component stiffness and ids.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool step = false;
  bool dashed = false;
};

/// Vertical event line with a caption.
struct Marker {
  double x = 0.0;
  std::string label;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Marker> markers;
};

/// Stacked panels, fixed palette, no timestamps or random ids anywhere so
/// the same input always renders to the same bytes.
std::string render_svg(const std::vector<Panel>& panels);

/// Long-form companion data: header then `panel,series,x,y` rows with
/// shortest round-trip numbers.
std::string render_csv(const std::vector<Panel>& panels);

/// Demo vs planned attractor reference vs executed motion along one
/// tangent axis, with the sensed force on the same axis below.
std::vector<Panel> overlay_panels(const Geometry& geom,
                                  const Demonstration& demo,
                                  const ExecutionLog& log, int axis);

/// Per-component stiffness diagonal over the nominal schedule, one
/// step-line per tangent dimension.
std::vector<Panel> stiffness_panels(const SkillModel& model);

/// Tracking error, sensed force magnitude, and the active component over
/// an episode, replanning events marked.
std::vector<Panel> timeline_panels(const Geometry& geom,
                                   const ExecutionLog& log);

}  // namespace fskill::plot
