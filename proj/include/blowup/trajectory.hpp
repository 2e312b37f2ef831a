#pragma once

#include <array>
#include <vector>

#include "blowup/hermite.hpp"

namespace blowup {

/// One row of a self-similar trajectory.
struct StepRecord {
  double s = 0.0;
  std::array<double, 3> modes{};  ///< q0, q1, q2
  double minus_seminorm = 0.0;
  double qe_sup = 0.0;
  double q_sup = 0.0;
  double grad_q_sup = 0.0;
  double B_sup = 0.0;
  double R_sup = 0.0;
  double N_sup = 0.0;
};

/// Stored fields for the Duhamel diagnostics.
struct Snapshot {
  double s = 0.0;
  Field q;
  Field Vq;
  Field B;
  Field R;
  Field N;
};

struct TrajectoryRecord {
  double ds = 0.0;
  double K0 = 0.0;
  /// steps.front() is the initial state; steps.back() is the exit step, if any.
  std::vector<StepRecord> steps;
  /// A few steps integrated past the exit, used only for difference quotients.
  std::vector<StepRecord> continuation;
  std::vector<Snapshot> snapshots;
};

}  // namespace blowup
