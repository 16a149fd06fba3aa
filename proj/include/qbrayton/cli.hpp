#pragma once

// Command-line front end: eval, corners, sweep, isothermal, verify.
// Flags may also come from a JSON object given with --config; flags on the
// command line win. Exit codes: 0 ok, 1 invalid input, 2 numerical failure,
// 3 verification failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qbrayton/cycles.hpp"
#include "qbrayton/errors.hpp"
#include "qbrayton/numerics.hpp"
#include "qbrayton/processes.hpp"
#include "qbrayton/substance.hpp"
#include "qbrayton/verify.hpp"

namespace qbrayton::cli {

enum class Command { Eval, Corners, Sweep, Isothermal, Verify };
enum class Format { Csv, Json };

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitVerify = 3;

inline const char* const kSweepHeader =
    "j_over_b,beta_a,f_high,q_in,q_out,w_net,w_loc,w_ratio,eta,eta_loc,refrigerator,feasible";

struct RunConfig {
  Command command = Command::Eval;
  CycleKind kind = CycleKind::FixedFx;
  Coupling model = Coupling::XX;
  double field = 1.0;
  std::optional<double> length;  // single spin: L = 1/B
  double coupling = 0.5;
  double gamma = 0.0;
  double delta = 0.0;
  std::optional<double> kt;
  std::optional<double> beta;
  double compression_ratio = 3.0;
  double pressure_ratio = 0.25;
  double vary_lo = 0.0;
  double vary_hi = 2.0;
  int vary_points = 41;
  SweepHold hold = SweepHold::AnchorTemperature;
  std::optional<double> f_high;
  Bump bump = Bump::Field;
  double step = 0.01;
  bool oracle = false;
  int samples = kDefaultPathSamples;
  unsigned workers = 0;
  Tolerances tol;
  std::optional<Format> format;
  std::string output;

  Format output_format() const {
    if (format) return *format;
    return command == Command::Sweep ? Format::Csv : Format::Json;
  }

  // Anchor inverse temperature from --beta or --kT.
  double anchor_beta() const {
    if (beta && kt) throw DomainError("give either --beta or --kT, not both");
    if (beta) {
      detail::require_positive(*beta, "--beta");
      return *beta;
    }
    if (kt) {
      detail::require_positive(*kt, "--kT");
      return 1.0 / *kt;
    }
    throw DomainError("anchor temperature missing: give --kT or --beta");
  }

  Substance substance() const {
    if (kind == CycleKind::SingleSpin) {
      if (length) return SpinHalf::from_coordinate(*length);
      return SpinHalf(field);
    }
    if (length) throw DomainError("--L applies to the single-spin kind; use --B for a pair");
    return pair(coupling);
  }

  CoupledPair pair(double j) const {
    if (model == Coupling::XX) {
      if (gamma != 0.0 || delta != 0.0) throw DomainError("--gamma/--delta need --model xy");
      return CoupledPair::xx(field, j);
    }
    return CoupledPair::general_xy(field, j, gamma, delta);
  }

  void validate() const {
    tol.validate();
    detail::require_samples(samples);
    if (command == Command::Sweep && vary_points < 2) {
      throw DomainError("--vary-j needs at least 2 points, got " + std::to_string(vary_points));
    }
  }
};

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt12(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Rounded to 12 significant digits; null when undefined.
inline nlohmann::ordered_json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt12(v));
}

inline nlohmann::ordered_json jnum(const std::optional<double>& v) { return v ? jnum(*v) : nlohmann::ordered_json(nullptr); }

inline nlohmann::ordered_json report_json(const CycleReport& r, CycleKind kind) {
  nlohmann::ordered_json j;
  j["q_in"] = jnum(r.q_in);
  j["q_out"] = jnum(r.q_out);
  j["w_net"] = jnum(r.w_net);
  j["eta"] = jnum(r.eta);
  j["q1_loc"] = jnum(r.q1_loc);
  j["q2_loc"] = jnum(r.q2_loc);
  j["w_loc"] = jnum(r.w_loc);
  j["w_ratio"] = jnum(r.w_ratio(kind));
  j["eta_loc"] = jnum(r.eta_loc);
  j["refrigerator"] = r.refrigerator;
  j["p_e_a"] = jnum(r.p_e_a);
  j["p_e_b"] = jnum(r.p_e_b);
  j["coupling_work"] = jnum(r.coupling_work);
  return j;
}

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {"q_in",   "q_out",   "w_net",        "eta",   "q1_loc",
                                                "q2_loc", "w_loc",   "w_ratio",      "eta_loc",
                                                "refrigerator", "p_e_a", "p_e_b", "coupling_work"};
  return cols;
}

inline std::string csv_cell(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return fmt12(v.get<double>());
  return v.get<std::string>();
}

inline void write_csv_object(std::ostream& out, const nlohmann::ordered_json& obj) {
  bool first = true;
  for (const auto& [key, _] : obj.items()) {
    out << (first ? "" : ",") << key;
    first = false;
  }
  out << "\n";
  first = true;
  for (const auto& [_, value] : obj.items()) {
    out << (first ? "" : ",") << csv_cell(value);
    first = false;
  }
  out << "\n";
}

inline nlohmann::ordered_json point_json(const std::string& name, const ThermalPoint& tp) {
  nlohmann::ordered_json j;
  j["corner"] = name;
  j["B"] = jnum(tp.field());
  j["beta"] = jnum(tp.beta());
  j["X"] = jnum(1.0 / tp.field());
  j["F_x"] = jnum(force(tp, Coordinate::X));
  if (is_pair(tp.substance())) {
    j["J"] = jnum(tp.coupling());
    j["Y"] = tp.coupling() > 0.0 ? jnum(1.0 / tp.coupling()) : nlohmann::ordered_json(nullptr);
    j["F_y"] = tp.coupling() > 0.0 ? jnum(force(tp, Coordinate::Y)) : nlohmann::ordered_json(nullptr);
  }
  j["entropy"] = jnum(entropy(tp));
  j["u"] = jnum(internal_energy(tp));
  j["p_e"] = jnum(excited_population(tp));
  return j;
}

// ---------------------------------------------------------------------------
// Commands

inline BraytonSpec cycle_spec(const RunConfig& c) {
  return {c.kind, ThermalPoint(c.substance(), c.anchor_beta()), c.compression_ratio, c.pressure_ratio, c.samples};
}

inline int cmd_eval(const RunConfig& c, std::ostream& out) {
  const BraytonSpec spec = cycle_spec(c);
  const CornerSet corners = solve_corners(spec, c.tol);
  const CycleReport r = brayton_report(corners, spec);
  nlohmann::ordered_json j;
  j["kind"] = to_string(c.kind);
  j["beta_a"] = jnum(spec.anchor.beta());
  j["f_high"] = jnum(force(spec.anchor, held_coordinate(c.kind)));
  const auto report = report_json(r, c.kind);
  for (const auto& [k, v] : report.items()) j[k] = v;
  std::optional<nlohmann::ordered_json> oracle;
  if (c.oracle) oracle = report_json(oracle_report(corners, spec), c.kind);
  if (c.output_format() == Format::Json) {
    if (oracle) j["oracle"] = *oracle;
    out << j.dump(2) << "\n";
  } else {
    if (oracle) {
      for (const auto& [k, v] : oracle->items()) j["oracle_" + k] = v;
    }
    write_csv_object(out, j);
  }
  return kExitOk;
}

inline int cmd_corners(const RunConfig& c, std::ostream& out) {
  const BraytonSpec spec = cycle_spec(c);
  const CornerSet k = solve_corners(spec, c.tol);
  std::vector<nlohmann::ordered_json> points = {point_json("A", k.a), point_json("B", k.b), point_json("C", k.c),
                                                point_json("D", k.d)};
  if (c.output_format() == Format::Json) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(c.kind);
    j["lambda"] = jnum(k.lambda);
    j["closure_residual"] = jnum(k.closure_residual);
    j["corners"] = points;
    nlohmann::ordered_json chain = nlohmann::ordered_json::array();
    for (const double r : ratio_chain(k, c.kind)) chain.push_back(jnum(r));
    j["ratio_chain"] = chain;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  bool first = true;
  for (const auto& [key, _] : points.front().items()) {
    out << (first ? "" : ",") << key;
    first = false;
  }
  out << "\n";
  for (const auto& p : points) {
    first = true;
    for (const auto& [_, value] : p.items()) {
      out << (first ? "" : ",") << csv_cell(value);
      first = false;
    }
    out << "\n";
  }
  return kExitOk;
}

inline SweepSpec sweep_spec(const RunConfig& c) {
  if (c.kind == CycleKind::SingleSpin) throw DomainError("sweep varies J/B and needs --kind fixed-fx or fixed-fy");
  SweepSpec s;
  s.kind = c.kind;
  s.model = c.model;
  s.gamma = c.gamma;
  s.delta = c.delta;
  s.field = c.field;
  s.lo = c.vary_lo;
  s.hi = c.vary_hi;
  s.points = c.vary_points;
  s.hold = c.hold;
  if (c.hold == SweepHold::AnchorTemperature) {
    if (c.f_high) throw DomainError("--F-high applies to --hold force");
    s.anchor_beta = c.anchor_beta();
  } else {
    if (!c.f_high) throw DomainError("--hold force needs --F-high");
    if (c.kt || c.beta) throw DomainError("--hold force solves the anchor temperature; drop --kT/--beta");
    s.anchor_force = *c.f_high;
  }
  s.compression_ratio = c.compression_ratio;
  s.pressure_ratio = c.pressure_ratio;
  s.n_samples = c.samples;
  if (c.model == Coupling::XX && (c.gamma != 0.0 || c.delta != 0.0)) {
    throw DomainError("--gamma/--delta need --model xy");
  }
  return s;
}

inline int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const SweepSpec spec = sweep_spec(c);
  const std::vector<SweepRow> rows = sweep(spec, c.tol, c.workers);
  if (c.output_format() == Format::Csv) {
    out << kSweepHeader << "\n";
    for (const SweepRow& row : rows) {
      const CycleReport& r = row.report;
      const auto v = [&](double x) { return row.feasible ? fmt12(x) : std::string(); };
      out << fmt12(row.j_over_b) << "," << fmt12(row.beta_a) << "," << fmt12(row.f_high) << "," << v(r.q_in) << ","
          << v(r.q_out) << "," << v(r.w_net) << "," << v(r.w_loc) << "," << v(row.w_ratio) << "," << v(r.eta)
          << "," << (row.feasible && r.eta_loc ? fmt12(*r.eta_loc) : "") << ","
          << (row.feasible ? (r.refrigerator ? "true" : "false") : "") << "," << (row.feasible ? "true" : "false")
          << "\n";
    }
    return kExitOk;
  }
  nlohmann::ordered_json j;
  j["kind"] = to_string(c.kind);
  j["hold"] = c.hold == SweepHold::AnchorTemperature ? "temperature" : "force";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const SweepRow& row : rows) {
    nlohmann::ordered_json e;
    e["j_over_b"] = jnum(row.j_over_b);
    e["beta_a"] = jnum(row.beta_a);
    e["f_high"] = jnum(row.f_high);
    e["feasible"] = row.feasible;
    if (row.feasible) {
      const auto report = report_json(row.report, c.kind);
      for (const auto& [k, v] : report.items()) e[k] = v;
    } else {
      e["reason"] = row.reason;
    }
    arr.push_back(std::move(e));
  }
  j["rows"] = std::move(arr);
  std::optional<double> threshold;
  try {
    threshold = refrigerator_threshold(spec, rows, c.tol);
  } catch (const Error& e) {
    j["refrigerator_threshold_error"] = e.what();
  }
  j["refrigerator_threshold"] = jnum(threshold);
  out << j.dump(2) << "\n";
  return kExitOk;
}

inline int cmd_isothermal(const RunConfig& c, std::ostream& out) {
  const CoupledPair pair = c.pair(c.coupling);
  const double beta = c.anchor_beta();
  const HeatDirections d = isothermal_heat_directions(pair, beta, c.bump, c.step, c.samples);
  nlohmann::ordered_json j;
  j["B"] = jnum(pair.field());
  j["J"] = jnum(pair.coupling());
  j["beta"] = jnum(beta);
  j["bump"] = c.bump == Bump::Field ? "B" : "J";
  j["step"] = jnum(c.step);
  j["total_heat"] = jnum(d.total_heat);
  j["local_heat"] = jnum(d.local_heat);
  j["total"] = to_string(d.total);
  j["local"] = to_string(d.local);
  j["p_e_start"] = jnum(d.start.p_excited);
  j["beta_loc_start"] = jnum(d.start.beta_loc);
  j["ground_population"] = jnum(d.ground_population);
  if (c.output_format() == Format::Json) {
    out << j.dump(2) << "\n";
  } else {
    write_csv_object(out, j);
  }
  return kExitOk;
}

inline int cmd_verify(const RunConfig& c, std::ostream& out) {
  std::vector<verify::CriterionResult> results = {verify::numerics_kernels()};
  for (int id = 1; id <= verify::kCriteria; ++id) results.push_back(verify::run_criterion(id));
  bool all = true;
  for (const auto& r : results) all = all && r.pass();
  if (c.output_format() == Format::Json) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
      arr.push_back({{"id", r.id},
                     {"title", r.title},
                     {"pass", r.pass()},
                     {"checks", r.checks},
                     {"failures", r.failures},
                     {"first_failure", r.first_failure}});
    }
    j["suites"] = std::move(arr);
    j["pass"] = all;
    out << j.dump(2) << "\n";
  } else {
    for (const auto& r : results) out << verify::summary_line(r) << "\n";
    out << (all ? "all suites pass" : "verification FAILED") << "\n";
  }
  return all ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------------------
// Parsing

// Reads a flat JSON object {"flag-name": value, ...} as CLI11 config items.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_string()) {
        item.inputs = {value.get<std::string>()};
      } else if (value.is_boolean()) {
        item.inputs = {value.get<bool>() ? "true" : "false"};
      } else if (value.is_number()) {
        item.inputs = {value.dump()};
      } else {
        throw CLI::ConversionError("config key '" + key + "' must be a string, number or boolean");
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

// "lo:hi:n"
inline void parse_range(const std::string& text, RunConfig& c) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos) throw DomainError("--vary-j expects lo:hi:n, got '" + text + "'");
  try {
    std::size_t used = 0;
    const std::string lo = text.substr(0, a);
    const std::string hi = text.substr(a + 1, b - a - 1);
    const std::string n = text.substr(b + 1);
    c.vary_lo = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    c.vary_hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
    c.vary_points = std::stoi(n, &used);
    if (used != n.size()) throw std::invalid_argument(n);
  } catch (const std::logic_error&) {
    throw DomainError("--vary-j expects lo:hi:n, got '" + text + "'");
  }
}

inline void build_app(CLI::App& app, RunConfig& c, std::string& range) {
  static const std::map<std::string, Command> commands = {{"eval", Command::Eval},
                                                          {"corners", Command::Corners},
                                                          {"sweep", Command::Sweep},
                                                          {"isothermal", Command::Isothermal},
                                                          {"verify", Command::Verify}};
  static const std::map<std::string, CycleKind> kinds = {
      {"single-spin", CycleKind::SingleSpin}, {"fixed-fx", CycleKind::FixedFx}, {"fixed-fy", CycleKind::FixedFy}};
  static const std::map<std::string, Coupling> models = {{"xx", Coupling::XX}, {"xy", Coupling::GeneralXY}};
  static const std::map<std::string, SweepHold> holds = {{"temperature", SweepHold::AnchorTemperature},
                                                         {"force", SweepHold::AnchorForce}};
  static const std::map<std::string, Bump> bumps = {{"B", Bump::Field}, {"J", Bump::Coupling}};
  static const std::map<std::string, Format> formats = {{"csv", Format::Csv}, {"json", Format::Json}};

  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON object of flag values; command-line flags take precedence");

  app.add_option("command", c.command, "eval | corners | sweep | isothermal | verify")
      ->required()
      ->transform(CLI::CheckedTransformer(commands, CLI::ignore_case))
      ->option_text("COMMAND");
  app.add_option("--kind", c.kind, "single-spin | fixed-fx | fixed-fy")
      ->transform(CLI::CheckedTransformer(kinds, CLI::ignore_case))
      ->option_text("KIND");
  app.add_option("--model", c.model, "xx | xy")->transform(CLI::CheckedTransformer(models, CLI::ignore_case))->option_text("MODEL");
  app.add_option("--B", c.field, "field B at corner A");
  app.add_option("--L", c.length, "single-spin coordinate L = 1/B");
  app.add_option("--J", c.coupling, "coupling J at corner A");
  app.add_option("--gamma", c.gamma, "XY anisotropy gamma");
  app.add_option("--delta", c.delta, "XY anisotropy Delta");
  app.add_option("--kT", c.kt, "anchor temperature kT");
  app.add_option("--beta", c.beta, "anchor inverse temperature");
  app.add_option("--r", c.compression_ratio, "compression ratio X_A/X_B (Y_A/Y_B for fixed-fy)");
  app.add_option("--phi", c.pressure_ratio, "pressure ratio F_low/F_high");
  app.add_option("--vary-j", range, "sweep J/B range lo:hi:n");
  app.add_option("--hold", c.hold, "sweep anchor hold: temperature | force")
      ->transform(CLI::CheckedTransformer(holds, CLI::ignore_case))
      ->option_text("HOLD");
  app.add_option("--F-high", c.f_high, "held force at corner A for --hold force");
  app.add_option("--bump", c.bump, "isothermal bump: B | J")->transform(CLI::CheckedTransformer(bumps))->option_text("B|J");
  app.add_option("--step", c.step, "isothermal step size");
  app.add_flag("--oracle", c.oracle, "eval: add the path-integrated report");
  app.add_option("--samples", c.samples, "samples per path (4k+1)");
  app.add_option("--workers", c.workers, "sweep worker threads (0 = hardware)");
  app.add_option("--tol-root", c.tol.root_rel, "root tolerance");
  app.add_option("--tol-quad", c.tol.quad_rel, "quadrature tolerance");
  app.add_option("--format", c.format, "csv | json")->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))->option_text("FORMAT");
  app.add_option("--output", c.output, "output file (default standard output)");
}

inline int dispatch(const RunConfig& c, std::ostream& out) {
  switch (c.command) {
    case Command::Eval: return cmd_eval(c, out);
    case Command::Corners: return cmd_corners(c, out);
    case Command::Sweep: return cmd_sweep(c, out);
    case Command::Isothermal: return cmd_isothermal(c, out);
    case Command::Verify: return cmd_verify(c, out);
  }
  return kExitInvalid;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  std::string range;
  CLI::App app{"Quantum Brayton cycles with a spin-1/2 or coupled spin pair", "qbrayton"};
  build_app(app, c, range);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  try {
    if (!range.empty()) parse_range(range, c);
    c.validate();
    std::ostringstream buffer;
    const int code = dispatch(c, buffer);
    if (c.output.empty()) {
      out << buffer.str();
    } else {
      std::ofstream file(c.output, std::ios::binary);
      if (!file) throw DomainError("cannot open --output file '" + c.output + "'");
      file << buffer.str();
    }
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_numerical_failure(e) ? kExitNumerical : kExitInvalid;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace qbrayton::cli
