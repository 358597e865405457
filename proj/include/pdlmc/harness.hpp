#pragma once

// Config-driven experiment runner behind the `pdlmc` command line tool.
//
// Configs are INI files with three sections:
//
//   [problem]  kind = truncated_gaussian | gaussian_moment | logistic_fairness | market
//   [sampler]  kind = lmc | pdlmc | dlmc | dual-ascent-minibatch | projected-lmc | rejection
//   [output]   dir, emit, histogram_coord, histogram_bins
//
// Every key is documented in README.md. Unknown keys are rejected.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "pdlmc/diagnostics.hpp"
#include "pdlmc/labeled_table.hpp"
#include "pdlmc/problems.hpp"
#include "pdlmc/samplers.hpp"
#include "pdlmc/trajectory_io.hpp"

namespace pdlmc {

enum class SamplerKind { kLmc, kPdlmc, kDlmc, kMinibatch, kProjectedLmc, kRejection };

inline std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::kLmc: return "lmc";
    case SamplerKind::kPdlmc: return "pdlmc";
    case SamplerKind::kDlmc: return "dlmc";
    case SamplerKind::kMinibatch: return "dual-ascent-minibatch";
    case SamplerKind::kProjectedLmc: return "projected-lmc";
    case SamplerKind::kRejection: return "rejection";
  }
  return "?";
}

/// Flat `section.key -> value` view of a config, after defaults.
using ResolvedConfig = std::map<std::string, std::string>;

struct RunConfig {
  std::filesystem::path source;
  ResolvedConfig resolved;
  Problem problem;
  SamplerKind sampler = SamplerKind::kPdlmc;
  SamplerConfig sampler_config;
  Vector x0;
  std::filesystem::path output_dir;
  std::set<std::string> emit;
  std::size_t histogram_coord = 0;
  std::size_t histogram_bins = 50;

  /// Rejection draws are iid, so they are never burned in.
  double effective_burn_in() const {
    return sampler == SamplerKind::kRejection ? 0.0 : sampler_config.burn_in_fraction;
  }
};

struct RunResult {
  nlohmann::ordered_json summary;
  std::vector<std::filesystem::path> files;
  Trajectory trajectory;
};

namespace detail {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class ConfigReader {
 public:
  ConfigReader(const boost::property_tree::ptree& tree, std::string source)
      : tree_(tree), source_(std::move(source)) {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) {
        throw ConfigError(source_ + ": key '" + section + "' must live inside a [section]");
      }
      for (const auto& [key, value] : body) seen_.insert(section + "." + key);
    }
  }

  bool has(const std::string& key) const {
    return tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'))
        .has_value();
  }

  std::string str(const std::string& key) {
    used_.insert(key);
    auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
    if (!v) throw ConfigError(source_ + ": missing required key '" + key + "'");
    return std::string(trim(*v));
  }

  std::string str(const std::string& key, const std::string& fallback) {
    return has(key) ? str(key) : (used_.insert(key), fallback);
  }

  double real(const std::string& key) {
    const std::string s = str(key);
    double v = 0.0;
    if (!parse_double(s, v) || !std::isfinite(v)) {
      throw ConfigError(source_ + ": key '" + key + "' expects a finite number, got '" + s + "'");
    }
    return v;
  }

  double real(const std::string& key, double fallback) { return has(key) ? real(key) : fallback; }

  std::uint64_t integer(const std::string& key) {
    const std::string s = str(key);
    // Accept 5e6-style literals as long as they are exact non-negative integers.
    double v = 0.0;
    std::uint64_t u = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), u);
    if (ec == std::errc() && ptr == s.data() + s.size()) return u;
    if (parse_double(s, v) && v >= 0.0 && v < 1.8e19 && std::floor(v) == v) {
      return static_cast<std::uint64_t>(v);
    }
    throw ConfigError(source_ + ": key '" + key + "' expects a non-negative integer, got '" + s +
                      "'");
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(source_ + ": key '" + key + "' expects true/false, got '" + s + "'");
  }

  Vector vector(const std::string& key) {
    const std::string s = str(key);
    Vector out;
    for (auto cell : split_commas(s)) {
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw ConfigError(source_ + ": key '" + key + "' expects comma-separated numbers, got '" +
                          s + "'");
      }
      out.push_back(v);
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& key : seen_) {
      if (!used_.contains(key)) throw ConfigError(source_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::string source_;
  std::set<std::string> seen_;
  std::set<std::string> used_;
};

inline std::string join(const Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

inline StepSchedule read_schedule(ConfigReader& cfg, const std::string& name, double fallback,
                                  ResolvedConfig& resolved) {
  const std::string kind = cfg.str("sampler." + name + "_schedule", "constant");
  const double base = cfg.real("sampler." + name, fallback);
  resolved["sampler." + name] = format_double(base);
  resolved["sampler." + name + "_schedule"] = kind;
  if (kind == "constant") return StepSchedule::constant(base);
  if (kind == "inverse-sqrt") return StepSchedule::inverse_sqrt(base);
  throw ConfigError("sampler." + name + "_schedule must be 'constant' or 'inverse-sqrt', got '" +
                    kind + "'");
}

inline Problem read_problem(ConfigReader& cfg, const std::filesystem::path& base_dir,
                            ResolvedConfig& r) {
  const std::string kind = cfg.str("problem.kind");
  r["problem.kind"] = kind;
  auto resolve_path = [&](const std::string& key) {
    const std::string raw = cfg.str(key);
    r[key] = raw;
    std::filesystem::path p(raw);
    return p.is_absolute() ? p : base_dir / p;
  };
  if (kind == "truncated_gaussian") {
    TruncatedGaussianSpec spec;
    spec.mean = cfg.vector("problem.mean");
    r["problem.mean"] = join(spec.mean);
    const std::string region = cfg.str("problem.region");
    r["problem.region"] = region;
    if (region == "interval") {
      spec.region = Interval{cfg.real("problem.lower"), cfg.real("problem.upper")};
      r["problem.lower"] = format_double(std::get<Interval>(spec.region).lower);
      r["problem.upper"] = format_double(std::get<Interval>(spec.region).upper);
    } else if (region == "ball") {
      Ball ball{cfg.has("problem.center") ? cfg.vector("problem.center")
                                          : Vector(spec.mean.size(), 0.0),
                cfg.real("problem.radius")};
      r["problem.center"] = join(ball.center);
      r["problem.radius"] = format_double(ball.radius);
      spec.region = std::move(ball);
    } else {
      throw ConfigError("problem.region must be 'interval' or 'ball', got '" + region + "'");
    }
    spec.slack = cfg.real("problem.slack", 0.0);
    r["problem.slack"] = format_double(spec.slack);
    return make_truncated_gaussian(spec);
  }
  if (kind == "gaussian_moment") {
    GaussianMomentSpec spec{cfg.vector("problem.b")};
    r["problem.b"] = join(spec.b);
    return make_gaussian_moment(spec);
  }
  if (kind == "logistic_fairness") {
    LogisticFairnessSpec spec;
    spec.data = load_labeled_csv(resolve_path("problem.data").string());
    spec.prior_variance = cfg.real("problem.prior_variance", 3.0);
    spec.delta = cfg.real("problem.delta");
    r["problem.prior_variance"] = format_double(spec.prior_variance);
    r["problem.delta"] = format_double(spec.delta);
    return make_logistic_fairness(spec);
  }
  if (kind == "market") {
    MarketSpec spec;
    auto [names, series] = load_returns_csv(resolve_path("problem.data").string());
    spec.asset_names = std::move(names);
    spec.returns = std::move(series);
    spec.prior_variance = cfg.real("problem.prior_variance", 3.0);
    r["problem.prior_variance"] = format_double(spec.prior_variance);
    if (cfg.has("problem.variance_caps")) spec.variance_caps = cfg.vector("problem.variance_caps");
    const int target_keys = int(cfg.has("problem.target_means")) +
                            int(cfg.has("problem.target_scale")) +
                            int(cfg.has("problem.target_shift"));
    if (target_keys != 1) {
      throw ConfigError("market problems need exactly one of 'problem.target_means', "
                        "'problem.target_scale' or 'problem.target_shift'");
    }
    if (cfg.has("problem.target_means")) {
      spec.target_means = cfg.vector("problem.target_means");
      r["problem.target_means"] = join(spec.target_means);
    } else {
      // Targets relative to the unconstrained posterior means: scaled, or shifted.
      const bool scaled = cfg.has("problem.target_scale");
      const std::string key = scaled ? "problem.target_scale" : "problem.target_shift";
      const Vector factor = cfg.vector(key);
      r[key] = join(factor);
      const MarketPosterior post = market_posterior(spec);
      if (factor.size() != post.mean.size()) {
        throw ConfigError(key + " needs one entry per asset");
      }
      for (std::size_t i = 0; i < factor.size(); ++i) {
        spec.target_means.push_back(scaled ? factor[i] * post.mean[i] : post.mean[i] + factor[i]);
      }
    }
    return make_market(spec);
  }
  throw ConfigError("problem.kind '" + kind + "' is not one of truncated_gaussian, "
                    "gaussian_moment, logistic_fairness, market");
}

inline SamplerKind parse_sampler_kind(const std::string& s) {
  for (auto k : {SamplerKind::kLmc, SamplerKind::kPdlmc, SamplerKind::kDlmc,
                 SamplerKind::kMinibatch, SamplerKind::kProjectedLmc, SamplerKind::kRejection}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("sampler.kind '" + s + "' is not one of lmc, pdlmc, dlmc, "
                    "dual-ascent-minibatch, projected-lmc, rejection");
}

}  // namespace detail

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

/// Parses and validates a config file. Nothing is computed before the
/// sampler/problem pairing has been checked.
inline RunConfig load_run_config(const std::filesystem::path& path,
                                 const ConfigOverrides& overrides = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  detail::ConfigReader cfg(tree, path.string());
  RunConfig rc;
  rc.source = path;
  ResolvedConfig& r = rc.resolved;

  rc.problem = detail::read_problem(cfg, path.parent_path(), r);

  rc.sampler = detail::parse_sampler_kind(cfg.str("sampler.kind"));
  r["sampler.kind"] = to_string(rc.sampler);
  SamplerConfig& sc = rc.sampler_config;
  sc.eta_x = detail::read_schedule(cfg, "eta_x", 1e-3, r);
  sc.eta_lambda = detail::read_schedule(cfg, "eta_lambda", 1e-3, r);
  sc.eta_nu = detail::read_schedule(cfg, "eta_nu", 1e-3, r);
  sc.iterations = cfg.integer("sampler.iterations");
  sc.burn_in_fraction = cfg.real("sampler.burn_in", 0.5);
  sc.minibatch = cfg.integer("sampler.minibatch", 1);
  sc.dlmc_inner = cfg.integer("sampler.dlmc_inner", 1);
  sc.dlmc_gamma = cfg.real("sampler.dlmc_gamma", sc.eta_x.base);
  sc.dlmc_warm_start = cfg.boolean("sampler.dlmc_warm_start", true);
  sc.seed = overrides.seed.value_or(cfg.integer("sampler.seed", 0));
  sc.log_stride = cfg.integer("sampler.log_stride", sc.iterations >= 1'000'000 ? 10 : 1);
  sc.dual_cap = cfg.real("sampler.dual_cap", 1e4);
  r["sampler.iterations"] = std::to_string(sc.iterations);
  r["sampler.burn_in"] = detail::format_double(sc.burn_in_fraction);
  r["sampler.minibatch"] = std::to_string(sc.minibatch);
  r["sampler.dlmc_inner"] = std::to_string(sc.dlmc_inner);
  r["sampler.dlmc_gamma"] = detail::format_double(sc.dlmc_gamma);
  r["sampler.dlmc_warm_start"] = sc.dlmc_warm_start ? "true" : "false";
  r["sampler.seed"] = std::to_string(sc.seed);
  r["sampler.log_stride"] = std::to_string(sc.log_stride);
  r["sampler.dual_cap"] = detail::format_double(sc.dual_cap);
  sc.validate();

  rc.x0 = cfg.has("sampler.x0") ? cfg.vector("sampler.x0") : Vector(rc.problem.dim, 0.0);
  if (rc.x0.size() != rc.problem.dim) {
    throw ConfigError("sampler.x0 has " + std::to_string(rc.x0.size()) +
                      " entries, the problem has dimension " + std::to_string(rc.problem.dim));
  }
  r["sampler.x0"] = detail::join(rc.x0);

  rc.output_dir = overrides.output_dir.value_or(
      std::filesystem::path(cfg.str("output.dir", "out")));
  if (rc.output_dir.is_relative() && !overrides.output_dir) {
    rc.output_dir = path.parent_path() / rc.output_dir;
  }
  const std::string emit = cfg.str("output.emit", "trajectory,ergodic,feasibility,duals");
  for (auto item : detail::split_commas(emit)) {
    const std::string name(detail::trim(item));
    if (name.empty()) continue;
    static const std::set<std::string> known{"trajectory", "ergodic", "feasibility", "duals",
                                             "histogram"};
    if (!known.contains(name)) {
      throw ConfigError("output.emit: unknown item '" + name +
                        "' (expected trajectory, ergodic, feasibility, duals, histogram)");
    }
    rc.emit.insert(name);
  }
  rc.histogram_coord = cfg.integer("output.histogram_coord", 0);
  rc.histogram_bins = cfg.integer("output.histogram_bins", 50);
  {
    std::string joined;
    for (const auto& e : rc.emit) joined += (joined.empty() ? "" : ",") + e;
    r["output.emit"] = joined;
  }
  r["output.histogram_coord"] = std::to_string(rc.histogram_coord);
  r["output.histogram_bins"] = std::to_string(rc.histogram_bins);
  cfg.reject_unknown();

  if (rc.histogram_coord >= rc.problem.dim) {
    throw ConfigError("output.histogram_coord is out of range for dimension " +
                      std::to_string(rc.problem.dim));
  }
  if (rc.histogram_bins < 2) throw ConfigError("output.histogram_bins must be at least 2");

  // Sampler/problem compatibility.
  switch (rc.sampler) {
    case SamplerKind::kDlmc:
      if (rc.problem.num_eq() > 0) {
        throw ConfigError("sampler.kind: dlmc requires a problem without equality constraints");
      }
      break;
    case SamplerKind::kRejection:
      if (!rc.problem.gaussian_mean || rc.problem.support.empty()) {
        throw ConfigError("sampler.kind: rejection requires a truncated Gaussian problem");
      }
      break;
    case SamplerKind::kProjectedLmc:
      if (!rc.problem.region) {
        throw ConfigError("sampler.kind: projected-lmc requires a problem with a support region");
      }
      break;
    default:
      break;
  }
  return rc;
}

/// Hash of every resolved field except the output directory.
inline std::string config_hash(const ResolvedConfig& resolved) {
  std::string canonical;
  for (const auto& [key, value] : resolved) canonical += key + "=" + value + "\n";
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a(canonical);
  return out.str();
}

inline Trajectory execute_sampler(const RunConfig& rc, std::optional<double>* acceptance = nullptr) {
  const Problem& p = rc.problem;
  const SamplerConfig& sc = rc.sampler_config;
  switch (rc.sampler) {
    case SamplerKind::kLmc: return run_lmc(p, sc, rc.x0);
    case SamplerKind::kPdlmc: return run_pdlmc(p, sc, rc.x0);
    case SamplerKind::kDlmc: return run_dlmc(p, sc, rc.x0);
    case SamplerKind::kMinibatch: return run_dual_ascent_minibatch(p, sc, rc.x0);
    case SamplerKind::kProjectedLmc: return run_projected_lmc(p, sc, rc.x0);
    case SamplerKind::kRejection: {
      const RejectionResult draws = rejection_sample(p, sc.iterations, sc.seed);
      if (acceptance) *acceptance = draws.acceptance_rate;
      return rejection_trajectory(p, draws, sc);
    }
  }
  throw std::logic_error("unhandled sampler kind");
}

struct HistogramBin {
  double center;
  double density;
};

/// Normalized histogram over [min, max] of the values.
inline std::vector<HistogramBin> histogram_of(std::span<const double> values, std::size_t bins) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (values.empty()) throw ConfigError("histogram: no samples left after burn-in");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++counts[std::min(b, bins - 1)];
  }
  std::vector<HistogramBin> out(bins);
  const double norm = 1.0 / (static_cast<double>(values.size()) * width);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b] = {lo + (static_cast<double>(b) + 0.5) * width, static_cast<double>(counts[b]) * norm};
  }
  return out;
}

inline std::vector<HistogramBin> trajectory_histogram(const Trajectory& traj, std::size_t coord,
                                                      std::size_t bins, double burn_in_fraction) {
  if (coord >= traj.dim()) {
    throw ConfigError("histogram: coordinate " + std::to_string(coord) +
                      " is out of range for dimension " + std::to_string(traj.dim()));
  }
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (traj.empty()) throw ConfigError("histogram: trajectory is empty");
  const auto first =
      static_cast<std::size_t>(std::floor(burn_in_fraction * static_cast<double>(traj.size())));
  Vector values;
  for (std::size_t i = first; i < traj.size(); ++i) values.push_back(traj[i].x[coord]);
  return histogram_of(values, bins);
}

inline void write_histogram_csv(const std::vector<HistogramBin>& hist, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write histogram '" + path + "'");
  out << "bin_center,density\n";
  for (const auto& b : hist) {
    out << detail::format_double(b.center) << ',' << detail::format_double(b.density) << '\n';
  }
}

/// Histogram of column x_{coord} of a trajectory.csv, after burn-in.
inline std::vector<HistogramBin> histogram(const std::string& trajectory_csv, std::size_t coord,
                                           std::size_t bins, double burn_in_fraction = 0.5) {
  return trajectory_histogram(read_trajectory_csv(trajectory_csv), coord, bins, burn_in_fraction);
}

namespace detail {

inline nlohmann::json json_or_null(std::optional<double> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline void write_ergodic_csv(const Trajectory& traj, const std::string& path) {
  // Running (cumulative, no burn-in) averages of x, g and h at each record.
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << 'k';
  for (std::size_t i = 0; i < traj.dim(); ++i) out << ",mean_x_" << i;
  for (std::size_t i = 0; i < traj.num_ineq(); ++i) out << ",mean_g_" << i;
  for (std::size_t i = 0; i < traj.num_eq(); ++i) out << ",mean_h_" << i;
  out << '\n';
  Vector sum(traj.dim() + traj.num_ineq() + traj.num_eq(), 0.0);
  for (std::size_t r = 0; r < traj.size(); ++r) {
    const auto rec = traj[r];
    std::size_t c = 0;
    for (auto col : {rec.x, rec.g_of_x, rec.h_of_x}) {
      for (double v : col) sum[c++] += v;
    }
    out << rec.k;
    for (double s : sum) out << ',' << format_double(s / static_cast<double>(r + 1));
    out << '\n';
  }
}

inline void write_feasibility_csv(const FeasibilityReport& rep, const Problem& p,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "kind,index,name,ergodic_value\n";
  for (std::size_t i = 0; i < rep.ergodic_slack.size(); ++i) {
    out << "inequality," << i << ',' << p.ineq[i].name << ','
        << format_double(rep.ergodic_slack[i]) << '\n';
  }
  for (std::size_t j = 0; j < rep.ergodic_equality.size(); ++j) {
    out << "equality," << j << ',' << p.eq[j].name << ','
        << format_double(rep.ergodic_equality[j]) << '\n';
  }
  if (rep.outside_fraction) {
    out << "outside_fraction,,," << format_double(*rep.outside_fraction) << '\n';
  }
}

inline void write_duals_csv(const DualReadout& d, const Problem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "kind,index,name,final,ergodic,active\n";
  for (std::size_t i = 0; i < d.ergodic_lambda.size(); ++i) {
    const bool active =
        std::find(d.active_set.begin(), d.active_set.end(), i) != d.active_set.end();
    out << "lambda," << i << ',' << p.ineq[i].name << ',' << format_double(d.final_lambda[i])
        << ',' << format_double(d.ergodic_lambda[i]) << ',' << (active ? 1 : 0) << '\n';
  }
  for (std::size_t j = 0; j < d.ergodic_nu.size(); ++j) {
    const bool active = std::abs(d.ergodic_nu[j]) > d.activity_threshold;
    out << "nu," << j << ',' << p.eq[j].name << ',' << format_double(d.final_nu[j]) << ','
        << format_double(d.ergodic_nu[j]) << ',' << (active ? 1 : 0) << '\n';
  }
}

}  // namespace detail

/// Runs one configured experiment and writes its outputs.
inline RunResult run(const RunConfig& rc) {
  const auto started = std::chrono::steady_clock::now();
  std::optional<double> acceptance;
  RunResult result{{}, {}, execute_sampler(rc, &acceptance)};
  const auto finished = std::chrono::steady_clock::now();
  const Trajectory& traj = result.trajectory;
  const double burn_in = rc.effective_burn_in();

  const Vector mean = ergodic_mean(traj, burn_in);
  const FeasibilityReport feas = feasibility_report(traj, rc.problem, burn_in);
  const DualReadout duals = dual_readout(traj, rc.problem, burn_in);

  std::filesystem::create_directories(rc.output_dir);
  auto emit_file = [&](const std::string& name) {
    const auto path = rc.output_dir / name;
    result.files.push_back(path);
    return path.string();
  };
  if (rc.emit.contains("trajectory")) write_trajectory_csv(traj, emit_file("trajectory.csv"));
  if (rc.emit.contains("ergodic")) detail::write_ergodic_csv(traj, emit_file("ergodic.csv"));
  if (rc.emit.contains("feasibility")) {
    detail::write_feasibility_csv(feas, rc.problem, emit_file("feasibility.csv"));
  }
  if (rc.emit.contains("duals")) detail::write_duals_csv(duals, rc.problem, emit_file("duals.csv"));
  if (rc.emit.contains("histogram")) {
    write_histogram_csv(
        trajectory_histogram(traj, rc.histogram_coord, rc.histogram_bins, burn_in),
        emit_file("histogram.csv"));
  }

  auto& s = result.summary;
  s["seed"] = rc.sampler_config.seed;
  s["config_hash"] = config_hash(rc.resolved);
  s["sampler"] = to_string(rc.sampler);
  s["problem"] = rc.problem.label;
  s["K"] = rc.sampler_config.iterations;
  s["records"] = traj.size();
  s["ergodic_mean"] = mean;
  s["ergodic_lambda"] = duals.ergodic_lambda;
  s["ergodic_nu"] = duals.ergodic_nu;
  s["final_lambda"] = duals.final_lambda;
  s["final_nu"] = duals.final_nu;
  s["max_slack"] = std::isfinite(feas.max_slack) ? nlohmann::json(feas.max_slack)
                                                 : nlohmann::json(nullptr);
  s["ergodic_slack"] = feas.ergodic_slack;
  s["outside_fraction"] = detail::json_or_null(feas.outside_fraction);
  s["acceptance_rate"] = detail::json_or_null(acceptance);
  s["active_set"] = duals.active_set;
  s["dual_notes"] = duals.notes;
  s["wall_ms"] =
      std::chrono::duration<double, std::milli>(finished - started).count();
  std::vector<std::string> manifest;
  for (const auto& f : result.files) manifest.push_back(f.filename().string());
  manifest.push_back("summary.json");
  s["files"] = manifest;

  const auto summary_path = rc.output_dir / "summary.json";
  std::ofstream out(summary_path);
  if (!out) throw ConfigError("cannot write '" + summary_path.string() + "'");
  out << s.dump(2) << '\n';
  result.files.push_back(summary_path);
  return result;
}

struct ComparisonRow {
  std::string name;
  std::string sampler;
  Vector ergodic_mean;
  std::optional<double> max_slack;
  std::optional<double> outside_fraction;
  std::optional<double> boundary_fraction;
  std::optional<double> w2_to_oracle;
};

namespace detail {

inline ResolvedConfig problem_keys(const ResolvedConfig& r) {
  ResolvedConfig out;
  for (const auto& [k, v] : r) {
    if (k.starts_with("problem.")) out[k] = v;
  }
  return out;
}

inline std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::setprecision(6) << *v;
  return s.str();
}

inline std::string cell(const Vector& v) {
  std::ostringstream s;
  s << std::setprecision(6);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ";" : "") << v[i];
  return s.str();
}

}  // namespace detail

/// Runs several configs on the same problem concurrently and tabulates
/// them. For 1-D Gaussian support problems each row also gets the W2
/// distance between its kept samples and an exact rejection sample.
inline std::vector<ComparisonRow> compare(const std::vector<std::filesystem::path>& configs,
                                          const std::filesystem::path& out_dir,
                                          double boundary_width = 0.01,
                                          std::uint64_t oracle_seed = 7) {
  if (configs.empty()) throw ConfigError("compare needs at least one config");
  std::vector<RunConfig> runs;
  for (const auto& path : configs) {
    RunConfig rc = load_run_config(path);
    rc.output_dir = out_dir / path.stem();
    runs.push_back(std::move(rc));
  }
  const auto reference = detail::problem_keys(runs.front().resolved);
  for (const auto& rc : runs) {
    if (detail::problem_keys(rc.resolved) != reference) {
      throw ConfigError("compare: '" + rc.source.string() + "' targets a different problem than '" +
                        runs.front().source.string() + "'");
    }
  }

  std::vector<std::future<RunResult>> pending;
  for (const auto& rc : runs) {
    pending.push_back(std::async(std::launch::async, [&rc] { return run(rc); }));
  }
  std::vector<RunResult> results;
  for (auto& f : pending) results.push_back(f.get());

  const Problem& problem = runs.front().problem;
  std::optional<Vector> oracle_sorted;
  const bool one_d_support = problem.dim == 1 && problem.gaussian_mean && !problem.support.empty();

  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunConfig& rc = runs[i];
    const Trajectory& traj = results[i].trajectory;
    const double burn_in = rc.effective_burn_in();
    const FeasibilityReport feas = feasibility_report(traj, rc.problem, burn_in);
    ComparisonRow row;
    row.name = rc.source.stem().string();
    row.sampler = to_string(rc.sampler);
    row.ergodic_mean = ergodic_mean(traj, burn_in);
    if (std::isfinite(feas.max_slack)) row.max_slack = feas.max_slack;
    row.outside_fraction = feas.outside_fraction;
    if (rc.problem.region) {
      row.boundary_fraction = boundary_fraction(traj, rc.problem, boundary_width, burn_in);
    }
    if (one_d_support) {
      const Window w = kept_window(traj, burn_in);
      Vector kept;
      for (std::size_t r = w.first_index; r < traj.size(); ++r) kept.push_back(traj[r].x[0]);
      std::sort(kept.begin(), kept.end());
      const std::size_t n = std::min<std::size_t>(kept.size(), 100'000);
      if (!oracle_sorted) {
        const RejectionResult exact = rejection_sample(problem, 100'000, oracle_seed);
        oracle_sorted.emplace();
        for (const auto& s : exact.samples) oracle_sorted->push_back(s[0]);
        std::sort(oracle_sorted->begin(), oracle_sorted->end());
      }
      row.w2_to_oracle = w2_1d(quantile_subsample(kept, n), quantile_subsample(*oracle_sorted, n));
    }
    rows.push_back(std::move(row));
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir / "comparison.csv");
  if (!csv) throw ConfigError("cannot write comparison.csv in '" + out_dir.string() + "'");
  csv << "run,sampler,ergodic_mean,max_slack,outside_fraction,boundary_fraction,w2_to_oracle\n";
  for (const auto& r : rows) {
    csv << r.name << ',' << r.sampler << ',' << detail::cell(r.ergodic_mean) << ','
        << detail::cell(r.max_slack) << ',' << detail::cell(r.outside_fraction) << ','
        << detail::cell(r.boundary_fraction) << ',' << detail::cell(r.w2_to_oracle) << '\n';
  }
  return rows;
}

/// Aligned plain-text rendering of a comparison.
inline std::string render_table(const std::vector<ComparisonRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"run", "sampler", "ergodic_mean", "max_slack", "outside", "boundary", "w2_oracle"}};
  for (const auto& r : rows) {
    cells.push_back({r.name, r.sampler, detail::cell(r.ergodic_mean), detail::cell(r.max_slack),
                     detail::cell(r.outside_fraction), detail::cell(r.boundary_fraction),
                     detail::cell(r.w2_to_oracle)});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c]) + 2) << line[c];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace pdlmc
