#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "blowup/hermite.hpp"
#include "blowup/trajectory.hpp"

namespace blowup {

enum class Component { Q0 = 0, Q1 = 1, Q2 = 2, QMinus = 3, QE = 4 };

std::string_view component_name(Component c);

struct TrapParams {
  double A = 8.0;
  double K0 = 4.0;
};

/// Validates A >= 1 and K0 > 0.
TrapParams make_trap(double A, double K0);

/// The five bounds of V_A(s): A/s^2, A/s^2, A^2 log s / s^2, A/s^2, A^2/sqrt(s).
std::array<double, 5> trap_bounds(const TrapParams& trap, double s);

struct TrapStatus {
  bool inside = true;
  std::array<double, 5> margins{};  ///< bound minus measured value
  std::optional<Component> violated;
};

/// Membership in V_A(s); on several violations the most negative margin wins,
/// ties going to the lowest component index.
TrapStatus check_membership(const ModeSummary& m, double s, const TrapParams& trap);
TrapStatus check_membership(const SpectralDecomp& d, double s, const TrapParams& trap);
TrapStatus check_membership(const StepRecord& r, const TrapParams& trap);

struct DerivedBoundsReport {
  /// sup_{|y| <= 2 K0 sqrt(s)} |q_b| / ((A^2 log s / s^2) (1 + |y|^3))
  double C_blowup_region = 0.0;
  /// ||q_b + q_e||_inf / (A^2 / sqrt(s))
  double C_sup = 0.0;
};

DerivedBoundsReport check_derived_bounds(const SpectralDecomp& d, double s,
                                         const TrapParams& trap);

class NoViolationError : public std::logic_error {
 public:
  NoViolationError() : std::logic_error("no violation: trajectory stayed in the trap set") {}
};

enum class ExitReason { None, Trap, Divergence };

struct ExitInfo {
  ExitReason reason = ExitReason::None;
  std::optional<Component> violated;
  double s_exit = 0.0;
  int mode = -1;  ///< 0 or 1 for an expanding-mode exit
  int omega = 0;  ///< sign of q_mode at exit
  double dq_ds = 0.0;
  bool transverse = false;  ///< omega * dq_mode/ds > 0

  bool exited() const { return reason != ExitReason::None; }
  bool expanding() const { return mode >= 0; }
};

/// Classifies the last row of the record, which must violate the trap. dq/ds
/// is a three-point backward difference, or a forward one from the
/// continuation rows when the exit happens within two steps of the start.
ExitInfo exit_classify(const TrajectoryRecord& record, const TrapParams& trap);

struct ReductionReport {
  std::size_t runs = 0;
  std::size_t exits = 0;
  std::size_t expanding_exits = 0;
  std::size_t transverse_exits = 0;
  std::size_t survivors = 0;
  std::array<std::size_t, 5> by_component{};
  double expanding_fraction = 0.0;   ///< expanding_exits / exits
  double transverse_fraction = 0.0;  ///< transverse_exits / expanding_exits
};

ReductionReport reduction_witness(std::span<const ExitInfo> batch);

}  // namespace blowup
