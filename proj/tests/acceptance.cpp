// Acceptance run: one PASS/FAIL line per criterion, details indented below it.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "blowup/checks.hpp"
#include "blowup/experiment.hpp"
#include "blowup/parallel.hpp"
#include "blowup/physical.hpp"
#include "blowup/semigroup.hpp"
#include "blowup/shooting.hpp"

using namespace blowup;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kOrthoTol = 1e-8;
constexpr double kFdOrder = 1.9;
constexpr double kEigenTol = 1e-6;
constexpr double kCompositionTol = 1e-6;
constexpr double kGradRatioMax = 1.01;                  // kernel constant 1, plus 1%
const double kValueRatioMax = 1.01 / std::sqrt(std::numbers::pi);  // kernel constant 1/sqrt(pi), plus 1%
constexpr double kProfileEps = 10.0;                    // multiples of machine epsilon
constexpr double kRSlope = -1.0, kRSlopeTol = 0.1;
constexpr double kQSlope = -0.5, kQSlopeTol = 0.15;
constexpr double kGradSlopeMax = kQSlope + kQSlopeTol;  // ||grad q|| sqrt(s) must not grow
constexpr double kFitSkip = 5.0;                        // transient left out of the slope fits
constexpr double kModeOdeDoubling = 0.25;               // |C(2 s0) / C(s0) - 1|
constexpr double kDuhamelConstMax = 1.0;
constexpr double kDuhamelClosure = 0.01;                // relative to ||q||
constexpr double kOracleTTol = 1e-4;
constexpr double kStabilityTTol = 1e-3;

constexpr double kS0 = 20.0, kS0Doubled = 40.0, kWindow = 30.0;
constexpr int kWitnessN = 7;
constexpr std::uint64_t kSeed = 1;

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> lines;

  void need(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", what));
  }
  void note(const std::string& what) { lines.push_back("info " + what); }
};

ModelParams pure() { return make_params(2, 0, 0, 0, 0, 0); }
ModelParams gradient_case() { return make_params(2, 1, 1, 1, 1, 1); }

SolverConfig solver(double s0) {
  SolverConfig c;
  c.ds = 0.01;
  c.bc = BoundaryCondition::Extrapolation;
  c.s0 = s0;
  c.s_end = s0 + kWindow;
  c.grid = default_grid(4.0, c.s_end);
  return c;
}

ShootOptions shoot_opts() {
  ShootOptions o;
  o.run_window = kWindow;
  o.threads = threads_from_env();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const CheckOutcome* find_check(const ExperimentOutcome& out, const std::string& name) {
  for (const auto& c : out.checks)
    if (c.name == name) return &c;
  return nullptr;
}

void require_checks(Criterion& c, const ExperimentOutcome& out, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    const CheckOutcome* k = find_check(out, n);
    if (!k) {
      c.need(false, fmt::format("{}: missing from report", n));
      continue;
    }
    c.need(k->passed, fmt::format("{}: measured {:.6g}, limit {:.6g}", n, k->measured, k->limit));
  }
}

struct TrapRun {
  ShootResult shot;
  DecayRates rates;
  ModeOdeReport ode;
};

TrapRun trapped(const ModelParams& params, double s0) {
  TrapRun t;
  t.shot = shoot(solver(s0), params, make_trap(8, 4), s0, shoot_opts());
  t.ode = mode_ode_check(t.shot.central.record);
  const double last = t.shot.central.record.steps.back().s;
  if (last >= s0 + kFitSkip + 2.0) t.rates = trapped_decay(t.shot.central.record, s0 + kFitSkip, s0 + kWindow);
  return t;
}

ShootResult trap_dynamics(Criterion& c, const ModelParams& params) {
  const TrapRun a = trapped(params, kS0);
  c.need(a.shot.survived, fmt::format("s0 = 20: (d0*, d1*) = ({:.17g}, {:.3g}) stays in V_A(s) up to s = {:.2f} (need 50)",
                                      a.shot.d0, a.shot.d1, a.shot.best_exit));
  c.need(std::abs(a.rates.q_slope - kQSlope) <= kQSlopeTol,
         fmt::format("||q||_inf log-log slope on [25, 50] = {:.4f} (band -0.5 +- 0.15)", a.rates.q_slope));
  c.need(a.rates.grad_slope <= kGradSlopeMax,
         fmt::format("||grad q||_inf log-log slope on [25, 50] = {:.4f} (bounded: <= {:.2f})", a.rates.grad_slope,
                     kGradSlopeMax));
  c.note(fmt::format("grad slope inside the two-sided band -0.5 +- 0.15: {} (decays faster than 1/sqrt(s))",
                     std::abs(a.rates.grad_slope - kQSlope) <= kQSlopeTol ? "yes" : "no"));
  c.note(fmt::format("max ||q|| sqrt(s) = {:.4f}, max ||grad q|| sqrt(s) = {:.4f}", a.rates.q_scaled_max,
                     a.rates.grad_scaled_max));
  const TrapRun b = trapped(params, kS0Doubled);
  const double ratio = b.ode.constant / a.ode.constant;
  c.need(std::abs(ratio - 1) <= kModeOdeDoubling,
         fmt::format("mode ODE sup s^2|q_m' - (1 - m/2) q_m|: {:.4f} at s0 = 20, {:.4f} at s0 = 40, ratio {:.4f}",
                     a.ode.constant, b.ode.constant, ratio));
  c.note(fmt::format("s0 = 40 shoot: survived {}, best exit {:.2f}, refinement stopped at depth {}",
                     b.shot.survived, b.shot.best_exit, b.shot.broken_at));
  return a.shot;
}

void witness(Criterion& c, const ModelParams& params, const std::string& tag) {
  const WitnessResult w = witness_grid(solver(kS0), params, make_trap(8, 4), kS0, kWitnessN, shoot_opts());
  const auto& r = w.report;
  c.need(r.exits > 0 && r.expanding_exits == r.exits,
         fmt::format("{}: {}/{} exits through the (q0, q1) faces ({} survivors of {})", tag, r.expanding_exits,
                     r.exits, r.survivors, r.runs));
  c.need(r.expanding_exits > 0 && r.transverse_exits == r.expanding_exits,
         fmt::format("{}: {}/{} expanding exits with omega dq_m/ds > 0", tag, r.transverse_exits, r.expanding_exits));
}

Criterion c1() {
  Criterion c{1, "spectral identities"};
  const Grid g = make_grid(20, 0.05);
  const double o = hermite_orthogonality_error(g, 5);
  c.need(o <= kOrthoTol, fmt::format("orthogonality error {:.3g} (<= {:.0e})", o, kOrthoTol));
  const FdOrderReport fd = fd_eigen_order(0.1, 20, 5);
  c.need(fd.min_order >= kFdOrder,
         fmt::format("observed order of ||L h_m - (1 - m/2) h_m|| at dy = 0.1, 0.05, 0.025: {:.4f} (>= {})",
                     fd.min_order, kFdOrder));
  c.note(fmt::format("m <= 2 are reproduced exactly by the stencil: max error {:.3g}", fd.exact_error));
  return c;
}

Criterion c2() {
  Criterion c{2, "semigroup"};
  const Grid g = make_grid(20, 0.05);
  double eig = 0;
  for (int m = 0; m <= 4; ++m)
    for (double th : {0.25, 0.5, 1.0, 2.0}) eig = std::max(eig, eigen_action_error(m, th, g));
  c.need(eig <= kEigenTol, fmt::format("eigen-action worst relative error {:.3g}", eig));
  const auto fields = random_smooth_fields(g, 10, kSeed);
  double comp = 0;
  for (auto [a, b] : {std::pair{0.25, 0.5}, std::pair{0.5, 1.0}, std::pair{1.0, 2.0}})
    comp = std::max(comp, composition_error(a, b, fields, 10.0));
  c.need(comp <= kCompositionTol, fmt::format("composition worst relative error {:.3g}", comp));
  double gr = 0, vr = 0;
  for (int k = 0; k <= 40; ++k) {
    const double th = 0.01 * std::pow(500.0, k / 40.0);
    const SmoothingReport r = verify_smoothing(th, fields);
    gr = std::max(gr, r.gradient_ratio);
    vr = std::max(vr, r.value_ratio);
  }
  c.need(gr <= kGradRatioMax, fmt::format("gradient smoothing ratio max over theta in [0.01, 5]: {:.4f} (<= {:.2f})", gr, kGradRatioMax));
  c.need(vr <= kValueRatioMax, fmt::format("value smoothing ratio max: {:.4f} (<= {:.4f})", vr, kValueRatioMax));
  return c;
}

Criterion c3() {
  Criterion c{3, "profile identities"};
  const double eps = std::numeric_limits<double>::epsilon();
  for (double p : {1.5, 2.0, 3.0, 5.0}) {
    const double e = profile_identity_error(make_params(p, 0, 0, 0, 0, 0), 1000, 20.0);
    c.need(e <= kProfileEps * eps, fmt::format("p = {}: residual {:.3g} eps", p, e / eps));
  }
  const std::array<double, 4> s{20, 40, 80, 160};
  const DecayFit f = remainder_decay(pure(), s);
  c.need(std::abs(f.slope - kRSlope) <= kRSlopeTol, fmt::format("sup|R(., s)| log-log slope {:.4f}", f.slope));
  return c;
}

Criterion c4() {
  Criterion c{4, "trap dynamics, pure semilinear"};
  trap_dynamics(c, pure());
  return c;
}

Criterion c5() {
  Criterion c{5, "reduction witness"};
  witness(c, pure(), "pure");
  return c;
}

Criterion c6() {
  Criterion c{6, "gradient term, mu = mu_bar = mu0 = 1, alpha = alpha_bar = 1"};
  const ModelParams g = gradient_case();
  const ShootResult shot = trap_dynamics(c, g);
  witness(c, g, "gradient");

  RunOptions o;
  o.snapshot_every = 10;
  const Field q = initial_q({shot.d0, shot.d1, kS0}, g, solver(kS0).grid);
  const TrajectoryResult run = run_trajectory(q, kS0, kS0 + kWindow, solver(kS0), g, make_trap(8, 4), o);
  const ForcingReport f = forcing_check(run.record, kS0);
  c.need(f.max_N_over_R <= 1.0, fmt::format("max ||N|| / ||R|| over s >= 20: {:.3g}", f.max_N_over_R));
  c.need(f.max_N_s4 <= 1.0, fmt::format("max ||N|| s^4 over s >= 20: {:.3g}", f.max_N_s4));
  for (auto [tau, s] : {std::pair{20.0, 21.0}, std::pair{25.0, 26.0}, std::pair{30.0, 32.0}, std::pair{40.0, 45.0}}) {
    const DuhamelReport d = duhamel_split_check(run.record, tau, s);
    const double worst = std::max({d.C_delta2, d.C_delta_minus, d.C_delta_e});
    c.need(worst <= kDuhamelConstMax && d.closure_residual <= kDuhamelClosure * d.q_sup,
           fmt::format("Duhamel on [{}, {}]: C(delta_2) {:.3g}, C(delta_-) {:.3g}, C(delta_e) {:.3g}, closure {:.2g}",
                       tau, s, d.C_delta2, d.C_delta_minus, d.C_delta_e, d.closure_residual));
  }
  return c;
}

ExperimentConfig pipeline_config() {
  return load_config(fs::path(BLOWUP_CONFIG_DIR) / "default.ini", {"experiment.kind=full-pipeline"});
}

struct Pipeline {
  fs::path dir;
  ExperimentOutcome out;
};

Pipeline run_pipeline(const std::string& tag) {
  Pipeline p;
  p.dir = fs::temp_directory_path() / ("blowup_lab_acceptance_" + tag);
  fs::remove_all(p.dir);
  p.out = run_experiment(pipeline_config(), p.dir, threads_from_env());
  return p;
}

Criterion c7(const Pipeline& pipe) {
  Criterion c{7, "physical blow-up"};
  const OdeOracleReport o = homogeneous_oracle(2.0, 1.0);
  c.need(o.T_rel_err <= kOracleTTol, fmt::format("homogeneous oracle: T_est = {:.12f}, relative error {:.3g}", o.T_est, o.T_rel_err));
  require_checks(c, pipe.out, {"trapped_run", "blew_up", "blowup_point", "center_value", "profile_error_no_growth"});
  c.note("the sharp constant of the profile estimate is not measurable at |log(T - t)| <= 45");

  ExperimentConfig g = load_config(fs::path(BLOWUP_CONFIG_DIR) / "gradient.ini", {"experiment.kind=physical"});
  const fs::path dir = fs::temp_directory_path() / "blowup_lab_acceptance_gradient_physical";
  fs::remove_all(dir);
  const ExperimentOutcome go = run_experiment(g, dir, 1);
  for (const char* n : {"blew_up", "blowup_point", "center_value", "profile_error_no_growth"}) {
    const CheckOutcome* k = find_check(go, n);
    c.need(k && k->passed, fmt::format("gradient case {}: measured {:.6g}", n, k ? k->measured : NAN));
  }
  return c;
}

Criterion c8(const Pipeline& pipe) {
  Criterion c{8, "stability probe"};
  require_checks(c, pipe.out, {"perturbed_blowup", "dT_shrinks_centered", "da_shrinks_centered", "dT_shrinks_offset",
                               "da_shrinks_offset", "smallest_eps_T"});
  const CheckOutcome* k = find_check(pipe.out, "smallest_eps_T");
  if (k) c.need(k->measured <= kStabilityTTol, fmt::format("|T(1e-4) - T_hat| / T_hat = {:.3g}", k->measured));
  c.note(slurp(pipe.dir / "stability.csv").empty() ? "stability.csv missing" : "per-perturbation values in stability.csv");
  return c;
}

Criterion c9(const Pipeline& a) {
  Criterion c{9, "reproducibility"};
  const Pipeline b = run_pipeline("b");
  std::size_t files = 0, same = 0;
  for (const auto& e : fs::directory_iterator(a.dir)) {
    ++files;
    if (slurp(e.path()) == slurp(b.dir / e.path().filename())) ++same;
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b.dir)) ++files_b;
  c.need(files > 0 && files == same && files == files_b,
         fmt::format("full pipeline run twice: {}/{} files byte-identical", same, files));
  return c;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  std::vector<Criterion> results;
  auto timed = [&](const std::function<Criterion()>& fn) {
    const auto t0 = clock::now();
    Criterion c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.pass = false;
      c.lines.push_back(fmt::format("FAIL exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::printf("criterion %d: %s  %s  (%.1f s)\n", c.id, c.pass ? "PASS" : "FAIL", c.title.c_str(), secs);
    for (const auto& l : c.lines) std::printf("    %s\n", l.c_str());
    std::fflush(stdout);
    results.push_back(c);
  };
  timed(c1);
  timed(c2);
  timed(c3);
  timed(c4);
  timed(c5);
  timed(c6);
  Pipeline pipe;
  timed([&] {
    pipe = run_pipeline("a");
    Criterion c = c7(pipe);
    return c;
  });
  timed([&] { return c8(pipe); });
  timed([&] { return c9(pipe); });

  int failed = 0;
  for (const auto& c : results) failed += c.pass ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
