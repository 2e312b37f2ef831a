#include "blowup/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>
#include <openssl/evp.h>

#include "blowup/checks.hpp"
#include "blowup/semigroup.hpp"
#include "json.hpp"

namespace blowup {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 7> kKinds{{
    {ExperimentKind::SpectralChecks, "spectral-checks"},
    {ExperimentKind::SemigroupChecks, "semigroup-checks"},
    {ExperimentKind::Trajectory, "trajectory"},
    {ExperimentKind::Shoot, "shoot"},
    {ExperimentKind::Physical, "physical"},
    {ExperimentKind::Stability, "stability"},
    {ExperimentKind::FullPipeline, "full-pipeline"},
}};

// Pass/fail thresholds of the experiment reports.
constexpr double kOrthoTol = 1e-8;
constexpr double kFdMinOrder = 1.9;
constexpr double kFdExactTol = 1e-9;
constexpr double kProfileEpsMultiple = 10.0;
constexpr double kDecaySlope = -1.0, kDecaySlopeTol = 0.1;
constexpr double kEigenTol = 1e-6;
constexpr double kCompositionTol = 1e-6;
constexpr double kSmoothingSlack = 1.01;
constexpr double kTrapSlope = -0.5, kTrapSlopeTol = 0.15;
constexpr double kTransientSkip = 5.0;
constexpr double kOracleTTol = 1e-4;
constexpr double kOraclePathTol = 1e-6;
constexpr double kPeakCells = 2.0;
constexpr double kCenterTol = 0.10;
constexpr double kTrendTol = 0.10;
constexpr double kStabilityTTol = 1e-3;

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, fmt::format("expected a number, got '{}'", text));
  }
}

long long parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, fmt::format("expected an integer, got '{}'", text));
  }
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Key {
  std::string name;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<Key> keys(ExperimentConfig& c) {
  std::vector<Key> k;
  auto real = [&](std::string name, double& ref) {
    k.push_back({name, [&ref, name](const std::string& v) { ref = parse_double(name, v); },
                 [&ref] { return fmt_double(ref); }});
  };
  auto integer = [&](std::string name, auto& ref) {
    k.push_back({name,
                 [&ref, name](const std::string& v) {
                   ref = static_cast<std::remove_reference_t<decltype(ref)>>(parse_int(name, v));
                 },
                 [&ref] { return fmt::format("{}", ref); }});
  };
  k.push_back({"experiment.kind", [&c](const std::string& v) { c.kind = parse_kind(v); },
               [&c] { return std::string(kind_name(c.kind)); }});
  k.push_back({"experiment.seed",
               [&c](const std::string& v) {
                 const long long s = parse_int("experiment.seed", v);
                 if (s < 0) throw ConfigError("experiment.seed", "must be non-negative");
                 c.seed = static_cast<std::uint64_t>(s);
               },
               [&c] { return fmt::format("{}", c.seed); }});
  real("model.p", c.p);
  real("model.alpha", c.alpha);
  real("model.alpha_bar", c.alpha_bar);
  real("model.mu", c.mu);
  real("model.mu_bar", c.mu_bar);
  real("model.mu0", c.mu0);
  real("solver.ds", c.ds);
  k.push_back({"solver.scheme",
               [&c](const std::string& v) {
                 if (v == "semigroup-split") c.scheme = Scheme::SemigroupSplit;
                 else if (v == "imex-cn") c.scheme = Scheme::ImexCN;
                 else throw ConfigError("solver.scheme", fmt::format("unknown scheme '{}'", v));
               },
               [&c] { return std::string(scheme_name(c.scheme)); }});
  k.push_back({"solver.bc",
               [&c](const std::string& v) {
                 if (v == "dirichlet-profile") c.bc = BoundaryCondition::DirichletProfile;
                 else if (v == "extrapolation") c.bc = BoundaryCondition::Extrapolation;
                 else throw ConfigError("solver.bc", fmt::format("unknown boundary condition '{}'", v));
               },
               [&c] { return std::string(bc_name(c.bc)); }});
  real("solver.dy", c.dy);
  real("solver.y_max", c.y_max);
  real("trap.A", c.A);
  real("trap.K0", c.K0);
  real("shoot.s0", c.s0);
  real("shoot.window", c.window);
  integer("shoot.max_levels", c.max_levels);
  real("shoot.sign_floor", c.sign_floor);
  integer("shoot.witness_n", c.witness_n);
  real("initial.d0", c.d0);
  real("initial.d1", c.d1);
  real("physical.domain_scale", c.domain_scale);
  integer("physical.half_count", c.half_count);
  real("physical.dt0", c.dt0);
  real("physical.lambda", c.lambda);
  real("physical.threshold", c.threshold);
  real("physical.t_budget", c.t_budget);
  real("physical.y_window", c.y_window);
  k.push_back({"stability.eps",
               [&c](const std::string& v) {
                 c.eps.clear();
                 std::stringstream ss(v);
                 std::string item;
                 while (std::getline(ss, item, ',')) c.eps.push_back(parse_double("stability.eps", trim(item)));
               },
               [&c] {
                 std::string out;
                 for (std::size_t i = 0; i < c.eps.size(); ++i) out += (i ? ", " : "") + fmt_double(c.eps[i]);
                 return out;
               }});
  real("stability.offset", c.offset);
  real("stability.width", c.width);
  return k;
}

void apply(ExperimentConfig& cfg, const std::string& name, const std::string& value) {
  if (name == "experiment.out_dir") {
    cfg.out_dir = trim(value);
    return;
  }
  for (const Key& k : keys(cfg)) {
    if (k.name == name) {
      k.set(trim(value));
      return;
    }
  }
  throw ConfigError(name, "unknown key");
}

// ---------------------------------------------------------------------------
// Output helpers

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::initializer_list<double> values) {
    std::string line;
    bool first = true;
    for (double v : values) {
      if (!first) line += ',';
      line += std::isfinite(v) ? fmt_double(v) : std::string("nan");
      first = false;
    }
    lines_.push_back(std::move(line));
  }
  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += '\n';
    for (const auto& l : lines_) out += l + '\n';
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> lines_;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

struct Writer {
  fs::path dir;
  std::vector<std::pair<std::string, std::string>> files;  // name, content

  void put(const std::string& name, std::string content) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", (dir / name).string()));
    files.emplace_back(name, std::move(content));
  }
};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json exit_json(const ExitInfo& e) {
  json j;
  j["reason"] = e.reason == ExitReason::None ? "none" : e.reason == ExitReason::Trap ? "trap" : "divergence";
  j["violated"] = e.violated ? json(std::string(component_name(*e.violated))) : json(nullptr);
  j["s_exit"] = number(e.s_exit);
  j["mode"] = e.mode;
  j["omega"] = e.omega;
  j["dq_ds"] = number(e.dq_ds);
  j["transverse"] = e.transverse;
  return j;
}

std::string trajectory_csv(const TrajectoryRecord& rec) {
  Csv csv({"s", "q0", "q1", "q2", "q_minus", "q_e", "q_sup", "grad_q_sup", "B_sup", "R_sup", "N_sup"});
  for (const StepRecord& r : rec.steps) {
    csv.row({r.s, r.modes[0], r.modes[1], r.modes[2], r.minus_seminorm, r.qe_sup, r.q_sup,
             r.grad_q_sup, r.B_sup, r.R_sup, r.N_sup});
  }
  return csv.text();
}

// ---------------------------------------------------------------------------
// Stages

class Run {
 public:
  Run(const ExperimentConfig& cfg, const fs::path& out, int threads)
      : cfg_(cfg), writer_{out, {}}, threads_(threads) {}

  ExperimentOutcome execute() {
    try {
      switch (cfg_.kind) {
        case ExperimentKind::SpectralChecks: spectral(); break;
        case ExperimentKind::SemigroupChecks: semigroup(); break;
        case ExperimentKind::Trajectory: trajectory(); break;
        case ExperimentKind::Shoot: shoot_stage(true); break;
        case ExperimentKind::Physical: physical_stage(cfg_.d0, cfg_.d1); break;
        case ExperimentKind::Stability: stability_stage(cfg_.d0, cfg_.d1); break;
        case ExperimentKind::FullPipeline: pipeline(); break;
      }
    } catch (const DivergenceError& e) {
      diverged_ = true;
      outcome_.message = e.what();
    } catch (const EnclosureBroken& e) {
      stage_failed(e.what());
    } catch (const ProfileError& e) {
      stage_failed(e.what());
    }
    finish();
    return outcome_;
  }

 private:
  void check(std::string name, bool ok, double measured, double limit, std::string detail = {}) {
    outcome_.checks.push_back({std::move(name), ok, measured, limit, std::move(detail)});
  }
  bool all_passed() const {
    return std::all_of(outcome_.checks.begin(), outcome_.checks.end(),
                       [](const CheckOutcome& c) { return c.passed; });
  }
  void stage_failed(const std::string& msg) {
    check("stage", false, 0.0, 0.0, msg);
    outcome_.message = msg;
  }

  void spectral() {
    const ModelParams params = model_params(cfg_);
    const Grid grid = make_grid(20.0, cfg_.dy);
    const double ortho = hermite_orthogonality_error(grid);
    check("hermite_orthogonality", ortho <= kOrthoTol, ortho, kOrthoTol);

    const FdOrderReport fd = fd_eigen_order(2.0 * cfg_.dy, 20.0);
    check("fd_eigen_order", fd.min_order >= kFdMinOrder, fd.min_order, kFdMinOrder,
          "observed order of ||L h_m - (1 - m/2) h_m||_rho for m = 3..5 under two halvings");
    check("fd_eigen_exact_low_modes", fd.exact_error <= kFdExactTol, fd.exact_error, kFdExactTol);
    Csv fd_csv({"m", "dy", "error"});
    for (std::size_t m = 0; m < fd.errors.size(); ++m) {
      for (std::size_t k = 0; k < 3; ++k) fd_csv.row({static_cast<double>(m), fd.dy[k], fd.errors[m][k]});
    }
    writer_.put("fd_order.csv", fd_csv.text());

    const double eps = std::numeric_limits<double>::epsilon();
    for (double p : {1.5, 2.0, 3.0, 5.0}) {
      const double err = profile_identity_error(make_params(p, 0, 0, 0, 0, 0));
      check(fmt::format("profile_identity_p{}", p), err <= kProfileEpsMultiple * eps, err,
            kProfileEpsMultiple * eps);
    }
    const std::array<double, 4> s_list{20.0, 40.0, 80.0, 160.0};
    const DecayFit fit = remainder_decay(params, s_list);
    check("remainder_decay_slope", std::abs(fit.slope - kDecaySlope) <= kDecaySlopeTol, fit.slope,
          kDecaySlopeTol, "log-log slope of sup|R(., s)|, target -1");
    Csv r_csv({"s", "R_sup"});
    for (std::size_t i = 0; i < fit.s.size(); ++i) r_csv.row({fit.s[i], fit.values[i]});
    writer_.put("remainder_decay.csv", r_csv.text());
  }

  void semigroup() {
    const Grid grid = make_grid(20.0, cfg_.dy);
    Csv eig({"m", "theta", "rel_error"});
    double worst = 0.0;
    for (int m = 0; m <= 4; ++m) {
      for (double theta : {0.25, 0.5, 1.0, 2.0}) {
        const double e = eigen_action_error(m, theta, grid);
        eig.row({static_cast<double>(m), theta, e});
        worst = std::max(worst, e);
      }
    }
    writer_.put("eigen_action.csv", eig.text());
    check("eigen_action", worst <= kEigenTol, worst, kEigenTol);

    const auto fields = random_smooth_fields(grid, 10, cfg_.seed);
    double comp = 0.0;
    for (auto [t1, t2] : {std::pair{0.25, 0.5}, std::pair{0.5, 1.0}, std::pair{1.0, 2.0}}) {
      comp = std::max(comp, composition_error(t1, t2, fields, 10.0));
    }
    check("composition", comp <= kCompositionTol, comp, kCompositionTol);

    Csv sm({"theta", "gradient_ratio", "value_ratio"});
    double gr = 0.0, vr = 0.0;
    for (int k = 0; k <= 40; ++k) {
      const double theta = 0.01 * std::pow(500.0, k / 40.0);
      const SmoothingReport r = verify_smoothing(theta, fields);
      sm.row({theta, r.gradient_ratio, r.value_ratio});
      gr = std::max(gr, r.gradient_ratio);
      vr = std::max(vr, r.value_ratio);
    }
    writer_.put("smoothing.csv", sm.text());
    check("smoothing_gradient", gr <= kSmoothingSlack, gr, kSmoothingSlack,
          "kernel bound constant 1");
    const double vlim = kSmoothingSlack / std::sqrt(std::numbers::pi);
    check("smoothing_value", vr <= vlim, vr, vlim, "kernel bound constant 1/sqrt(pi)");
  }

  void trajectory() {
    const ModelParams params = model_params(cfg_);
    const SolverConfig scfg = solver_config(cfg_);
    const TrapParams trap = trap_params(cfg_);
    const Field q = initial_q({cfg_.d0, cfg_.d1, cfg_.s0}, params, scfg.grid);
    RunOptions opts;
    opts.stop_on_exit = false;
    const TrajectoryResult run =
        run_trajectory(q, cfg_.s0, cfg_.s0 + cfg_.window, scfg, params, trap, opts);
    writer_.put("trajectory.csv", trajectory_csv(run.record));
    report_["exit"] = exit_json(run.exit);
    report_["s_last"] = run.record.steps.back().s;
    if (run.diverged) {
      diverged_ = true;
      outcome_.message = fmt::format("divergence at s={}; trajectory.csv holds the rows before it",
                                     run.s_diverged);
      return;
    }
    forcing_checks(run.record);
  }

  void forcing_checks(const TrajectoryRecord& rec) {
    const ForcingReport f = forcing_check(rec, cfg_.s0);
    check("N_below_R", f.max_N_over_R <= 1.0, f.max_N_over_R, 1.0, "max ||N||/||R|| over the run");
    check("N_below_s^-4", f.max_N_s4 <= 1.0, f.max_N_s4, 1.0, "max ||N|| s^4 over the run");
  }

  ShootResult shoot_stage(bool witness) {
    const ModelParams params = model_params(cfg_);
    const SolverConfig scfg = solver_config(cfg_);
    const TrapParams trap = trap_params(cfg_);
    const ShootOptions opts = shoot_options(cfg_, threads_);
    ShootResult res = shoot(scfg, params, trap, cfg_.s0, opts);

    json cert;
    cert["d0"] = res.d0;
    cert["d1"] = res.d1;
    cert["survived"] = res.survived;
    cert["best_exit"] = res.best_exit;
    cert["levels"] = res.levels;
    cert["broken_at"] = res.broken_at;
    cert["map"] = {{"a0", res.map.a0}, {"a1", res.map.a1}, {"b0", res.map.b0}, {"b1", res.map.b1},
                   {"d0_lo", res.map.d0_lo}, {"d0_hi", res.map.d0_hi},
                   {"d1_lo", res.map.d1_lo}, {"d1_hi", res.map.d1_hi}};
    cert["central_exit"] = exit_json(res.central.exit);
    report_["certificate"] = cert;

    Csv levels({"depth", "d0_lo", "d0_hi", "d1_lo", "d1_hi", "chosen", "min_corner_exit"});
    for (const ShootLevel& l : res.history) {
      levels.row({static_cast<double>(l.depth), l.rect[0], l.rect[1], l.rect[2], l.rect[3],
                  static_cast<double>(l.chosen), l.min_corner_exit});
    }
    writer_.put("shoot_levels.csv", levels.text());
    writer_.put("central_trajectory.csv", trajectory_csv(res.central.record));

    check("trapped_run", res.survived, res.best_exit, cfg_.s0 + cfg_.window,
          "largest exit time reached; a survivor stays in V_A(s) over the window");
    if (!res.survived) {
      outcome_.message = "no trapped trajectory found";
      return res;
    }
    const DecayRates rates =
        trapped_decay(res.central.record, cfg_.s0 + kTransientSkip, cfg_.s0 + cfg_.window);
    check("q_decay_slope", std::abs(rates.q_slope - kTrapSlope) <= kTrapSlopeTol, rates.q_slope,
          kTrapSlopeTol, "log-log slope of ||q||_inf, target -1/2");
    check("grad_q_bounded", rates.grad_slope <= kTrapSlope + kTrapSlopeTol, rates.grad_slope,
          kTrapSlope + kTrapSlopeTol, "||grad q||_inf sqrt(s) non-increasing within tolerance");
    const ModeOdeReport ode = mode_ode_check(res.central.record);
    report_["mode_ode"] = {{"C0", ode.constants[0]}, {"C1", ode.constants[1]}, {"C", ode.constant}};
    check("mode_ode_finite", std::isfinite(ode.constant), ode.constant, 0.0);
    forcing_checks(res.central.record);

    if (witness) {
      const WitnessResult w = witness_grid(scfg, params, trap, cfg_.s0, cfg_.witness_n, opts);
      Csv wc({"d0", "d1", "exited", "component", "s_exit", "mode", "omega", "dq_ds", "transverse"});
      for (const auto& c : w.points) {
        wc.row({c.d0, c.d1, c.exit.exited() ? 1.0 : 0.0,
                c.exit.violated ? static_cast<double>(*c.exit.violated) : -1.0, c.exit.s_exit,
                static_cast<double>(c.exit.mode), static_cast<double>(c.exit.omega), c.exit.dq_ds,
                c.exit.transverse ? 1.0 : 0.0});
      }
      writer_.put("witness.csv", wc.text());
      check("exits_through_modes", w.report.expanding_fraction == 1.0, w.report.expanding_fraction, 1.0);
      check("transverse_exits", w.report.transverse_fraction == 1.0, w.report.transverse_fraction, 1.0);
    }
    return res;
  }

  void physical_stage(double d0, double d1) {
    const ModelParams params = model_params(cfg_);
    const OdeOracleReport oracle = homogeneous_oracle(2.0, 1.0);
    check("ode_oracle_T", oracle.T_rel_err <= kOracleTTol, oracle.T_rel_err, kOracleTTol);
    check("ode_oracle_path", oracle.path_rel_err <= kOraclePathTol, oracle.path_rel_err, kOraclePathTol);

    const PhysicalConfig pcfg = physical_config(cfg_);
    const Field u0 = initial_u({d0, d1, cfg_.s0}, params, pcfg.grid);
    const PhysicalRun run = integrate_u(u0, params, pcfg);
    Csv series({"t", "u_max", "grad_max", "argmax", "dt", "zoom"});
    for (const PhysicalRow& r : run.rows) {
      series.row({r.t, r.u_max, r.grad_max, r.argmax, r.dt, static_cast<double>(r.zoom)});
    }
    writer_.put("physical_series.csv", series.text());
    const BlowupEstimate& est = run.est;
    report_["blowup"] = {{"blew_up", est.blew_up}, {"T_est", number(est.T_est)},
                         {"a_est", number(est.a_est)}, {"fit_quality", est.fit_quality},
                         {"t_last", est.t_last}, {"dx_final", est.dx_final}, {"zooms", run.zooms}};
    check("blew_up", est.blew_up, est.u_last, cfg_.threshold);
    if (!est.blew_up) return;
    const double a_lim = kPeakCells * est.dx_final;
    check("blowup_point", std::abs(est.a_est) <= a_lim, std::abs(est.a_est), a_lim);

    const ProfileErrorCurve curve = profile_error(run, params, cfg_.y_window);
    Csv pc({"t", "tau", "s", "e_inf", "e_grad", "e", "scaled", "center_ratio"});
    bool nested = true;
    for (const auto& r : curve.rows) {
      pc.row({r.t, r.tau, r.s, r.e_inf, r.e_grad, r.e, r.scaled, r.center_ratio});
      nested = nested && r.e_inf <= r.e;
    }
    writer_.put("profile_error.csv", pc.text());
    check("center_value", std::abs(curve.final_center_ratio - 1.0) <= kCenterTol,
          curve.final_center_ratio, kCenterTol, "u(a,t)(T-t)^{1/(p-1)}/kappa at the last resolvable time");
    check("profile_error_no_growth", curve.trend <= kTrendTol, curve.trend, kTrendTol,
          "relative change of e sqrt|log(T-t)| across the window");
    check("profile_error_nested", nested, 0.0, 0.0, "L-inf part never exceeds the W^{1,inf} error");
  }

  void stability_stage(double d0, double d1) {
    const ModelParams params = model_params(cfg_);
    const PhysicalConfig pcfg = physical_config(cfg_);
    const Field u0 = initial_u({d0, d1, cfg_.s0}, params, pcfg.grid);
    const double len = std::sqrt(std::exp(-cfg_.s0) * cfg_.s0);
    std::vector<Perturbation> perts;
    for (double c : {0.0, cfg_.offset}) {
      for (double e : cfg_.eps) perts.push_back({e, c * len, cfg_.width * len});
    }
    const StabilityReport rep = stability_probe(u0, perts, params, pcfg, threads_);
    Csv sc({"eps", "center", "blew_up", "T", "a", "dT", "da"});
    for (const auto& e : rep.entries) {
      sc.row({e.pert.eps, e.pert.center, e.blew_up ? 1.0 : 0.0, e.T, e.a, e.dT, e.da});
    }
    writer_.put("stability.csv", sc.text());
    report_["stability"] = {{"T_hat", rep.T_hat}, {"a_hat", rep.a_hat}, {"dx_final", rep.dx_final}};

    const bool all = std::all_of(rep.entries.begin(), rep.entries.end(),
                                 [](const StabilityEntry& e) { return e.blew_up; });
    check("perturbed_blowup", all, 0.0, 0.0, "every perturbed run blows up");
    if (!all) return;
    const double t_floor = 1e-12 * rep.T_hat;
    const double a_floor = 1e-2 * rep.dx_final;
    double smallest_dT = 0.0;
    const double eps_min = *std::min_element(cfg_.eps.begin(), cfg_.eps.end());
    for (int shape = 0; shape < 2; ++shape) {
      std::vector<std::pair<double, double>> dT, da;
      for (std::size_t i = 0; i < cfg_.eps.size(); ++i) {
        const auto& e = rep.entries[static_cast<std::size_t>(shape) * cfg_.eps.size() + i];
        dT.emplace_back(e.pert.eps, e.dT);
        da.emplace_back(e.pert.eps, e.da);
        if (e.pert.eps == eps_min) smallest_dT = std::max(smallest_dT, e.dT);
      }
      const std::string tag = shape == 0 ? "centered" : "offset";
      check("dT_shrinks_" + tag, shrinks_with_eps(dT, t_floor), 0.0, t_floor);
      check("da_shrinks_" + tag, shrinks_with_eps(da, a_floor), 0.0, a_floor);
      if (shape == 0) {
        double worst = 0.0;
        for (const auto& [eps, v] : da) worst = std::max(worst, v);
        check("centered_blowup_point", worst <= kPeakCells * rep.dx_final, worst,
              kPeakCells * rep.dx_final);
      }
    }
    check("smallest_eps_T", smallest_dT <= kStabilityTTol * rep.T_hat, smallest_dT / rep.T_hat,
          kStabilityTTol);
  }

  void pipeline() {
    const ShootResult res = shoot_stage(false);
    if (!all_passed()) {
      outcome_.message = "pipeline halted after the shoot stage";
      return;
    }
    physical_stage(res.d0, res.d1);
    if (!all_passed()) {
      outcome_.message = "pipeline halted after the physical stage";
      return;
    }
    stability_stage(res.d0, res.d1);
  }

  void finish() {
    if (diverged_) {
      outcome_.status = ExitStatus::Divergence;
    } else {
      outcome_.status = all_passed() ? ExitStatus::Pass : ExitStatus::CheckFailure;
    }
    const std::string hash = config_hash(cfg_);
    json report;
    report["kind"] = std::string(kind_name(cfg_.kind));
    report["config_hash"] = hash;
    report["status"] = static_cast<int>(outcome_.status);
    report["message"] = outcome_.message;
    json checks = json::array();
    for (const auto& c : outcome_.checks) {
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"measured", number(c.measured)},
                        {"limit", number(c.limit)}, {"detail", c.detail}});
    }
    report["checks"] = checks;
    for (auto& [k, v] : report_.items()) report[k] = v;
    writer_.put("config.ini", canonical_text(cfg_));
    writer_.put("report.json", report.dump(2) + "\n");

    std::string manifest = fmt::format("# config_hash {}\n", hash);
    for (const auto& [name, content] : writer_.files) {
      manifest += fmt::format("{}  {}  {}\n", sha256_hex(content), name, hash);
      outcome_.files.push_back(name);
    }
    writer_.put("MANIFEST", manifest);
    outcome_.files.push_back("MANIFEST");
  }

  const ExperimentConfig& cfg_;
  Writer writer_;
  int threads_;
  ExperimentOutcome outcome_;
  json report_ = json::object();
  bool diverged_ = false;
};

}  // namespace

std::string_view kind_name(ExperimentKind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
  for (const auto& [kind, n] : kKinds) {
    if (n == name) return kind;
  }
  throw ConfigError("experiment.kind", fmt::format("unknown experiment kind '{}'", name));
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("", fmt::format("malformed config: {}", e.message()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section, "key outside a section");
    for (const auto& [key, value] : body) apply(cfg, section + "." + key, value.data());
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError(ov, "override must be section.key=value");
    apply(cfg, trim(ov.substr(0, eq)), ov.substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", fmt::format("cannot read config file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

void validate(const ExperimentConfig& c) {
  try {
    make_params(c.p, c.alpha, c.alpha_bar, c.mu, c.mu_bar, c.mu0);
  } catch (const ParameterError& e) {
    const char* key = e.kind() == ParameterErrorKind::SupercriticalAlpha      ? "model.alpha"
                      : e.kind() == ParameterErrorKind::SupercriticalAlphaBar ? "model.alpha_bar"
                                                                              : "model.p";
    throw ConfigError(key, e.what());
  }
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, fmt::format("must be positive (got {})", v));
  };
  positive("solver.ds", c.ds);
  positive("solver.dy", c.dy);
  positive("trap.K0", c.K0);
  if (!(c.A >= 1.0)) throw ConfigError("trap.A", fmt::format("must be >= 1 (got {})", c.A));
  if (!(c.s0 > 1.0)) throw ConfigError("shoot.s0", fmt::format("need s0 > 1 so that T < 1/e (got {})", c.s0));
  positive("shoot.window", c.window);
  if (c.max_levels < 0) throw ConfigError("shoot.max_levels", "must be >= 0");
  if (!(c.sign_floor >= 0.0)) throw ConfigError("shoot.sign_floor", "must be >= 0");
  if (c.witness_n < 2) throw ConfigError("shoot.witness_n", "must be >= 2");
  const double need = 2.0 * c.K0 * std::sqrt(c.s0 + c.window);
  if (c.y_max != 0.0 && c.y_max < need) {
    throw ConfigError("solver.y_max",
                      fmt::format("grid half width {} does not cover 2 K0 sqrt(s0 + window) = {}", c.y_max, need));
  }
  positive("physical.domain_scale", c.domain_scale);
  if (c.half_count < 4 || c.half_count % 2 != 0) {
    throw ConfigError("physical.half_count", "must be even and >= 4");
  }
  positive("physical.dt0", c.dt0);
  positive("physical.lambda", c.lambda);
  positive("physical.threshold", c.threshold);
  positive("physical.t_budget", c.t_budget);
  positive("physical.y_window", c.y_window);
  if (c.eps.empty()) throw ConfigError("stability.eps", "needs at least one scale");
  for (double e : c.eps) positive("stability.eps", e);
  positive("stability.width", c.width);
  if (!std::isfinite(c.offset)) throw ConfigError("stability.offset", "must be finite");
}

std::string canonical_text(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  std::vector<std::pair<std::string, std::string>> lines;
  for (const Key& k : keys(copy)) lines.emplace_back(k.name, k.get());
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& [k, v] : lines) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(canonical_text(cfg)); }

ModelParams model_params(const ExperimentConfig& c) {
  return make_params(c.p, c.alpha, c.alpha_bar, c.mu, c.mu_bar, c.mu0);
}

TrapParams trap_params(const ExperimentConfig& c) { return make_trap(c.A, c.K0); }

SolverConfig solver_config(const ExperimentConfig& c) {
  SolverConfig s;
  s.ds = c.ds;
  s.scheme = c.scheme;
  s.bc = c.bc;
  s.s0 = c.s0;
  s.s_end = c.s0 + c.window;
  s.grid = c.y_max > 0.0 ? make_grid(c.y_max, c.dy) : default_grid(c.K0, s.s_end, c.dy);
  return s;
}

PhysicalConfig physical_config(const ExperimentConfig& c) {
  PhysicalConfig p;
  p.grid = physical_grid(c.s0, c.domain_scale, c.half_count);
  p.dt0 = c.dt0;
  p.lambda = c.lambda;
  p.blowup_threshold = c.threshold;
  p.t_budget = c.t_budget;
  return p;
}

ShootOptions shoot_options(const ExperimentConfig& c, int threads) {
  ShootOptions o;
  o.run_window = c.window;
  o.max_levels = c.max_levels;
  o.sign_floor = c.sign_floor;
  o.threads = threads;
  return o;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, int threads) {
  validate(cfg);
  return Run(cfg, out_dir, threads).execute();
}

}  // namespace blowup
