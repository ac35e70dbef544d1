#pragma once

#include <string>

#include "gpmpc/building/model.hpp"

namespace gpmpc::control {

using building::Vec3;

/// What a controller may see at the start of a control period: measured
/// quantities only.
struct Observation {
  int step = 0;
  double time_s = 0.0;
  Vec3 T{};
  Vec3 T_prev{};
  Vec3 theta_prev{};
  double T_sup = 0.0;
  double T_out = 0.0;
  double R_sol = 0.0;
};

struct ControlDiagnostics {
  bool solver = false;  // false for rule-based controllers
  int iterations = 0;
  double kkt = 0.0;
  bool converged = true;
  double planned_slack = 0.0;  // sum of squared first-stage slacks of the plan
  double wall_seconds = 0.0;
  std::string warm_start;
};

/// Common step interface of all controllers: observation in, valve angles out.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual Vec3 act(const Observation& obs) = 0;
  virtual ControlDiagnostics diagnostics() const { return {}; }
};

}  // namespace gpmpc::control
