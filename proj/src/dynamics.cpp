#include "aifp/dynamics.hpp"

#include <cmath>
#include <string>

namespace aifp {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void SystemParams::validate() const {
  require(std::isfinite(damping) && damping > 0.0, "damping must be > 0");
  require(std::isfinite(stiffness) && stiffness > 0.0, "stiffness must be > 0");
  require(std::isfinite(target), "target must be finite");
  require(std::isfinite(width) && width > 0.0, "width must be > 0");
  require(std::isfinite(click_threshold) && click_threshold > 0.0, "click threshold must be > 0");
}

ParamVector SystemParams::to_vector() const {
  ParamVector v;
  v << damping, stiffness, target, width, click_threshold;
  return v;
}

SystemParams SystemParams::from_vector(const ParamVector& v) {
  return SystemParams{v(0), v(1), v(2), v(3), v(4)};
}

void ActionBounds::validate() const {
  require(lower.allFinite() && upper.allFinite(), "action bounds must be finite");
  require((lower.array() < upper.array()).all(), "action lower bound must be below upper bound");
}

bool ActionBounds::contains(const Action& a) const {
  return (a.array() >= lower.array()).all() && (a.array() <= upper.array()).all();
}

Action ActionBounds::clamp(const Action& a) const { return a.cwiseMax(lower).cwiseMin(upper); }

void NoiseSpec::validate() const {
  require(std::isfinite(position_std) && position_std >= 0.0, "position noise std must be >= 0");
  require(std::isfinite(displacement_std) && displacement_std >= 0.0,
          "displacement noise std must be >= 0");
}

void TaskSpec::validate() const {
  require(canvas_px > 0.0, "canvas width must be > 0");
  require(scale > 0.0, "scale factor must be > 0");
  require(width_px > 0.0, "target width must be > 0");
  require(start_px >= 0.0 && start_px <= canvas_px, "start position outside canvas");
  require(target_px >= 0.0 && target_px <= canvas_px, "target outside canvas");
}

TaskGeometry scale_task(const TaskSpec& task) {
  task.validate();
  return TaskGeometry{to_model_units(task, task.target_px), task.width_px / task.scale};
}

double to_model_units(const TaskSpec& task, double px) { return (px - task.start_px) / task.scale; }

double to_pixels(const TaskSpec& task, double model) { return model * task.scale + task.start_px; }

double width_to_pixels(const TaskSpec& task, double model_width) { return model_width * task.scale; }

State step(const SystemParams& params, const State& s, const Action& a, double dt) {
  require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
  require(s.allFinite(), "state must be finite");
  require(a.allFinite(), "action must be finite");
  require(std::isfinite(params.damping) && std::isfinite(params.stiffness),
          "dynamics parameters must be finite");
  return transition(params.damping, params.stiffness, s, a, dt);
}

Observation observe(const SystemParams& params, const State& s) {
  const bool click = click_flag(s(state_index::prev_displacement), s(state_index::displacement),
                                params.click_threshold);
  const bool hit = click && inside_target(s(state_index::position), params.target, params.width);
  Observation o;
  o(obs_index::position) = s(state_index::position);
  o(obs_index::displacement) = s(state_index::displacement);
  o(obs_index::click) = click ? 1.0 : 0.0;
  o(obs_index::hit) = hit ? 1.0 : 0.0;
  o(obs_index::misclick) = o(obs_index::hit) - o(obs_index::click);
  return o;
}

Observation sample_observation(const SystemParams& params, const State& s, const NoiseSpec& noise,
                               Rng& rng) {
  Observation o = observe(params, s);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Both draws are taken even for zero std so the stream position is noise-independent.
  const double e1 = normal(rng);
  const double e2 = normal(rng);
  o(obs_index::position) += noise.position_std * e1;
  o(obs_index::displacement) += noise.displacement_std * e2;
  return o;
}

}  // namespace aifp
