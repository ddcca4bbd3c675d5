#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "aifp/rng.hpp"

namespace aifp {

// [cursor position, cursor velocity, previous button displacement, button displacement]
using State = Eigen::Vector4d;
// [cursor acceleration, button force rate]
using Action = Eigen::Vector2d;
// [position, displacement, click, hit, misclick]; discrete channels as 0/1/-1.
using Observation = Eigen::Matrix<double, 5, 1>;
using ParamVector = Eigen::Matrix<double, 5, 1>;

namespace state_index {
inline constexpr int position = 0;
inline constexpr int velocity = 1;
inline constexpr int prev_displacement = 2;
inline constexpr int displacement = 3;
}  // namespace state_index

namespace obs_index {
inline constexpr int position = 0;
inline constexpr int displacement = 1;
inline constexpr int click = 2;
inline constexpr int hit = 3;
inline constexpr int misclick = 4;
}  // namespace obs_index

namespace param_index {
inline constexpr int damping = 0;
inline constexpr int stiffness = 1;
inline constexpr int target = 2;
inline constexpr int width = 3;
inline constexpr int click_threshold = 4;
}  // namespace param_index

struct SystemParams {
  double damping = 24.0;
  double stiffness = 10.0;
  double target = 0.0;
  double width = 0.06;
  double click_threshold = 0.05;

  void validate() const;
  ParamVector to_vector() const;
  static SystemParams from_vector(const ParamVector& v);
};

struct ActionBounds {
  Action lower{-50.0, -1.0};
  Action upper{50.0, 1.0};

  void validate() const;
  bool contains(const Action& a) const;
  Action clamp(const Action& a) const;
};

struct NoiseSpec {
  double position_std = 0.01;
  double displacement_std = 0.01;

  void validate() const;
};

// Pixel-space description of a single pointing task.
struct TaskSpec {
  double canvas_px = 1800.0;
  double start_px = 900.0;
  double target_px = 1750.0;
  double width_px = 60.0;
  double scale = 1000.0;

  void validate() const;
  bool operator==(const TaskSpec&) const = default;
};

struct TaskGeometry {
  double target = 0.0;
  double width = 0.0;
};

TaskGeometry scale_task(const TaskSpec& task);
double to_model_units(const TaskSpec& task, double px);
double to_pixels(const TaskSpec& task, double model);
double width_to_pixels(const TaskSpec& task, double model_width);

// Unchecked transition shared by the simulator and the agent's internal model.
// The arithmetic is kept in one place so both produce bit-identical results.
inline State transition(double damping, double stiffness, const State& s, const Action& a,
                        double dt) {
  State next;
  next(0) = s(0) + dt * s(1);
  next(1) = s(1) - dt * damping * s(1) + dt * a(0);
  next(2) = s(3);
  next(3) = s(3) - dt * stiffness * s(3) + dt * a(1);
  return next;
}

inline bool click_flag(double prev_displacement, double displacement, double threshold) {
  return prev_displacement < threshold && displacement > threshold;
}

inline bool inside_target(double position, double target, double width) {
  return std::abs(position - target) <= width / 2.0;
}

// Throws std::invalid_argument on non-finite input or dt <= 0.
State step(const SystemParams& params, const State& s, const Action& a, double dt);

Observation observe(const SystemParams& params, const State& s);

Observation sample_observation(const SystemParams& params, const State& s, const NoiseSpec& noise,
                               Rng& rng);

}  // namespace aifp
