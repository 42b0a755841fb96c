#include "gridthreat/attack_io.hpp"
#include "gridthreat/attack_synthesis.hpp"
#include "gridthreat/csv.hpp"
#include "gridthreat/dc_powerflow.hpp"
#include "gridthreat/error.hpp"
#include "gridthreat/evaluation.hpp"
#include "gridthreat/fixtures.hpp"
#include "gridthreat/grid_model.hpp"
#include "gridthreat/lodf.hpp"
#include "gridthreat/scopf.hpp"
#include "gridthreat/state_estimation.hpp"
#include "gridthreat/verification.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace gridthreat;

namespace {

constexpr int kPu = 6;
constexpr int kDollars = 2;

struct Options {
  std::string case_path;
  std::string out_dir;
  std::optional<int> max_buses;
  std::optional<int> max_measurements;
  std::optional<double> delta_b;
  std::optional<double> delta_l;
  std::optional<double> line_fraction;
  std::optional<double> cost_budget;
  std::optional<double> tau;
  std::optional<int> slack;
  std::uint64_t seed = 1;
  int workers = 1;
  double noise = 0.0;
  std::string dispatch_path;
  std::string measurements_path;
  std::string attack_path;

  // sweep grids
  std::vector<double> sweep_delta_b;
  std::vector<double> sweep_delta_l;
  std::vector<double> sweep_fraction;
  std::vector<int> sweep_buses;
  std::vector<std::string> securing;
  double secure_fraction = 0.1;
  int secure_count = -1;
  int top_k = 1;
  int repetitions = 1;

  std::string emit;
};

// Percentages on the command line, fractions inside the library.
double percent(double v) { return v / 100.0; }

GridCase load_case(const Options& o) {
  if (o.case_path.empty()) throw Error("--case is required");
  GridCase g = load_case_file(o.case_path);
  if (o.slack) g.slack_bus = *o.slack;
  if (o.max_buses) g.attacker.max_buses = *o.max_buses;
  if (o.max_measurements) g.attacker.max_measurements = *o.max_measurements;
  if (o.delta_b) g.attacker.delta_b = percent(*o.delta_b);
  if (o.delta_l) g.attacker.delta_l = percent(*o.delta_l);
  if (o.line_fraction) g.attacker.target_line_fraction = percent(*o.line_fraction);
  if (o.cost_budget) g.attacker.cost_budget = *o.cost_budget;
  validate(g);
  return g;
}

// Writes `text` to <out>/<name> when --out is set, and to stdout when it
// is not.
void emit(const Options& o, const std::string& name, const std::string& text) {
  if (o.out_dir.empty()) {
    std::cout << text;
    return;
  }
  const fs::path path = fs::path(o.out_dir) / name;
  write_file_atomic(path, text);
  spdlog::info("wrote {}", path.string());
}

std::string money(double v) { return fixed(v, kDollars); }
std::string pu(double v) { return fixed(v, kPu); }

Eigen::VectorXd read_dispatch(const GridCase& g, const std::string& path) {
  std::vector<std::pair<int, double>> values;
  for (const auto& row : read_csv(path)) {
    if (row.size() < 2) throw Error("dispatch rows need bus,value");
    if (row[0] == "bus") continue;
    try {
      values.emplace_back(std::stoi(row[0]), std::stod(row[1]));
    } catch (const std::exception&) {
      throw Error("bad dispatch row '" + row[0] + "," + row[1] + "'");
    }
  }
  return bus_vector(g, values);
}

MeasurementVector read_measurements(const GridCase& g, const std::string& path) {
  std::map<int, double> readings;
  for (const auto& row : read_csv(path)) {
    if (row.size() < 2) throw Error("measurement rows need index,value");
    if (row[0] == "index") continue;
    try {
      readings[std::stoi(row[0])] = std::stod(row[1]);
    } catch (const std::exception&) {
      throw Error("bad measurement row '" + row[0] + "," + row[1] + "'");
    }
  }
  MeasurementVector z;
  z.indices = taken_indices(g);
  z.values.resize(static_cast<Eigen::Index>(z.indices.size()));
  for (size_t r = 0; r < z.indices.size(); ++r) {
    const auto it = readings.find(z.indices[r]);
    if (it == readings.end()) {
      throw Error("no reading for taken measurement " + std::to_string(z.indices[r]));
    }
    z.values[static_cast<Eigen::Index>(r)] = it->second;
  }
  return z;
}

std::string flow_table(const GridCase& g, const PowerFlowState& s) {
  std::string out = csv_row({"line", "from", "to", "flow_pu", "capacity_pu", "loading"});
  for (const auto& ln : g.lines) {
    const double f = s.line_flow[ln.id - 1];
    out += csv_row({std::to_string(ln.id), std::to_string(ln.from_bus), std::to_string(ln.to_bus),
                    pu(f), pu(ln.capacity), pu(std::abs(f) / ln.capacity)});
  }
  return out;
}

int run_powerflow(const Options& o) {
  const GridCase g = load_case(o);
  Eigen::VectorXd gen;
  if (o.dispatch_path.empty()) {
    gen = solve_scopf(g, g.load_vector()).dispatch;
  } else {
    gen = read_dispatch(g, o.dispatch_path);
  }
  emit(o, "powerflow.csv", flow_table(g, solve_powerflow(g, gen, g.load_vector())));
  return 0;
}

int run_lodf(const Options& o) {
  const GridCase g = load_case(o);
  const LodfMatrix m = compute_lodf(g);
  std::vector<std::string> header{"outage", "islanding"};
  for (int i = 1; i <= g.num_lines(); ++i) header.push_back("line_" + std::to_string(i));
  std::string out = csv_row(header);
  for (int k = 0; k < m.size(); ++k) {
    std::vector<std::string> row{std::to_string(k + 1), m.islanding[k] ? "1" : "0"};
    for (int i = 0; i < m.size(); ++i) row.push_back(pu(m.factors(i, k)));
    out += csv_row(row);
  }
  emit(o, "lodf.csv", out);
  return 0;
}

int run_estimate(const Options& o) {
  const GridCase g = load_case(o);
  MeasurementVector z;
  if (o.measurements_path.empty()) {
    const ScopfSolution pre = solve_scopf(g, g.load_vector());
    z = simulate_measurements(g, pre.flows.theta, o.noise, o.seed);
  } else {
    z = read_measurements(g, o.measurements_path);
  }
  EstimatorOptions eo;
  eo.tau = o.tau;
  const EstimationResult r = estimate(g, z, eo);
  std::string out = csv_row({"quantity", "id", "value"});
  for (int j = 1, s = 0; j <= g.num_buses(); ++j) {
    const double th = j == g.slack_bus ? 0.0 : r.x_hat[s++];
    out += csv_row({"theta", std::to_string(j), pu(th)});
  }
  out += csv_row({"residual", "", fixed(r.residual_norm, 9)});
  out += csv_row({"tau", "", fixed(r.tau, 9)});
  out += csv_row({"verdict", "", r.flagged ? "bad-data" : "ok"});
  emit(o, "estimate.csv", out);
  return 0;
}

int run_scopf(const Options& o) {
  const GridCase g = load_case(o);
  const ScopfSolution s = solve_scopf(g, g.load_vector());
  std::string out = csv_row({"record", "element", "contingency", "value", "limit"});
  for (const auto& gen : g.generators) {
    out += csv_row({"dispatch", std::to_string(gen.bus), "", pu(s.dispatch[gen.bus - 1]),
                    pu(gen.p_max)});
  }
  out += csv_row({"cost", "", "", money(s.cost), ""});
  for (const auto& b : s.binding) {
    out += csv_row({b.kind, std::to_string(b.element),
                    b.contingency ? std::to_string(b.contingency) : "", pu(b.value), pu(b.limit)});
  }
  emit(o, "scopf.csv", out);
  return 0;
}

std::string join_ids(const std::vector<bool>& flags) {
  std::string s;
  for (size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    if (!s.empty()) s += ' ';
    s += std::to_string(i + 1);
  }
  return s.empty() ? "-" : s;
}

std::string pair_line(const OverloadPair& p) {
  std::ostringstream os;
  os << "  line " << p.line << " after outage of line " << p.outage << ": flow " << pu(p.flow)
     << " pu, " << fixed(p.percent_of_capacity(), 2) << "% of capacity ("
     << fixed(p.percent_over(), 2) << "% over)\n";
  return os.str();
}

std::string attack_csv(const GridCase& g, const AttackVector& a) {
  std::string out = csv_row({"key", "id", "value"});
  for (int j = 1; j <= g.num_buses(); ++j) {
    out += csv_row({"attacked_load", std::to_string(j), pu(a.attacked_load[j - 1])});
  }
  for (int j = 1; j <= g.num_buses(); ++j) {
    out += csv_row({"delta_theta", std::to_string(j), fixed(a.delta_theta[j - 1], 9)});
  }
  for (int i = 1; i <= g.num_lines(); ++i) {
    out += csv_row({"delta_line", std::to_string(i), pu(a.delta_line[i - 1])});
  }
  for (const auto& gen : g.generators) {
    out += csv_row({"corrupted_dispatch", std::to_string(gen.bus),
                    pu(a.corrupted_dispatch[gen.bus - 1])});
  }
  for (size_t i = 0; i < a.altered.size(); ++i) {
    if (a.altered[i]) out += csv_row({"altered_measurement", std::to_string(i + 1), "1"});
  }
  out += csv_row({"corrupted_cost", "", money(a.corrupted_cost)});
  return out;
}

int run_synthesize(const Options& o) {
  const GridCase g = load_case(o);
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  const SynthesisGoal goal = goal_from_case(g, pre);
  SearchOptions so;
  so.workers = o.workers;
  const SynthesisResult r = synthesize(g, pre, goal, so);

  std::ostringstream rep;
  rep << "verdict: " << (r.sat ? "sat" : "unsat") << "\n"
      << "max buses: " << g.attacker.max_buses << ", max measurements: "
      << g.attacker.max_measurements << ", target pairs: " << goal.min_overload_pairs
      << ", margin: " << fixed(100 * goal.overload_margin, 2) << "%\n"
      << "pre-attack cost: $" << money(pre.cost) << ", budget: $" << money(goal.cost_budget)
      << "\n"
      << "subsets explored: " << r.certificate.subsets_explored
      << ", with attack freedom: " << r.certificate.subsets_with_freedom
      << ", subspaces solved: " << r.certificate.subspaces_solved << "\n";
  if (r.witness) {
    const AttackVector& a = *r.witness;
    std::string subset;
    for (int b : a.attacked_subset) subset += (subset.empty() ? "" : " ") + std::to_string(b);
    rep << "attacked subset: " << subset << "\n"
        << "compromised buses: " << join_ids(a.compromised) << "\n"
        << "altered measurements (" << a.altered_count() << "): " << join_ids(a.altered) << "\n"
        << "corrupted dispatch cost: $" << money(a.corrupted_cost) << "\n"
        << "overload pairs:\n";
    for (const auto& p : a.overload_pairs) rep << pair_line(p);
  }
  if (o.out_dir.empty()) {
    std::cout << rep.str();
    return 0;
  }
  emit(o, "report.txt", rep.str());
  if (r.witness) {
    emit(o, "attack.json", attack_to_json(g, *r.witness));
    emit(o, "attack.csv", attack_csv(g, *r.witness));
  }
  return 0;
}

int run_verify(const Options& o) {
  const GridCase g = load_case(o);
  if (o.attack_path.empty()) throw Error("--attack is required");
  std::ifstream in(o.attack_path, std::ios::binary);
  if (!in) throw Error("cannot open attack file '" + o.attack_path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const AttackVector a = attack_from_json(g, text.str());
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  VerifyOptions vo;
  vo.estimator.tau = o.tau;
  const VerificationReport v = verify(g, pre, a, vo);

  std::ostringstream rep;
  rep << "stealthy: " << (v.stealthy ? "yes" : "no") << " (residual change "
      << fixed(v.stealth_residual_change, 9) << ")\n";
  if (v.ems_view) {
    rep << "ems dispatch cost: $" << money(v.ems_view->cost) << ", max N-1 loading "
        << fixed(100 * v.ems_max_loading, 2) << "%\n";
  } else {
    rep << "ems dispatch: infeasible (" << v.ems_error << ")\n";
  }
  rep << "vector dispatch cost: $" << money(a.corrupted_cost) << ", cost delta: $"
      << money(v.cost_delta) << "\n"
      << "true base max loading: " << fixed(100 * v.true_base_max_loading, 2) << "%\n"
      << "oracle gap: " << fixed(v.oracle_gap, 9) << " pu\n"
      << "confirmed overloads (" << v.confirmed_overloads.size() << "):\n";
  for (const auto& p : v.confirmed_overloads) rep << pair_line(p);
  rep << "overloads under the ems dispatch (" << v.ems_dispatch_overloads.size() << "):\n";
  for (const auto& p : v.ems_dispatch_overloads) rep << pair_line(p);

  std::string csv = csv_row({"dispatch", "line", "outage", "flow_pu", "capacity_pu",
                             "percent_of_capacity", "percent_over"});
  auto add = [&](const char* src, const std::vector<OverloadPair>& pairs) {
    for (const auto& p : pairs) {
      csv += csv_row({src, std::to_string(p.line), std::to_string(p.outage), pu(p.flow),
                      pu(p.capacity), fixed(p.percent_of_capacity(), 2),
                      fixed(p.percent_over(), 2)});
    }
  };
  add("vector", v.confirmed_overloads);
  add("ems", v.ems_dispatch_overloads);

  if (o.out_dir.empty()) {
    std::cout << rep.str();
  } else {
    emit(o, "verify.txt", rep.str());
    emit(o, "overloads.csv", csv);
  }
  return 0;
}

int run_sweep_cmd(const Options& o) {
  const GridCase g = load_case(o);
  SweepSpec s;
  for (double v : o.sweep_delta_b) s.delta_b.push_back(percent(v));
  for (double v : o.sweep_delta_l) s.delta_l.push_back(percent(v));
  for (double v : o.sweep_fraction) s.line_fraction.push_back(percent(v));
  s.max_buses = o.sweep_buses;
  if (s.delta_b.empty()) s.delta_b = {g.attacker.delta_b};
  if (s.delta_l.empty()) s.delta_l = {g.attacker.delta_l};
  if (s.line_fraction.empty()) s.line_fraction = {g.attacker.target_line_fraction};
  if (s.max_buses.empty()) s.max_buses = {g.attacker.max_buses};
  s.securing.clear();
  for (const auto& name : o.securing) {
    SecuringSpec sec;
    if (name == "random") {
      sec.policy = SecuringPolicy::Random;
      sec.fraction = percent(o.secure_fraction);
      sec.count = o.secure_count;
    } else if (name == "analytical") {
      sec.policy = SecuringPolicy::Analytical;
      sec.top_k = o.top_k;
    }
    sec.seed = o.seed;
    s.securing.push_back(sec);
  }
  if (s.securing.empty()) s.securing.push_back(SecuringSpec{});
  s.repetitions = o.repetitions;
  s.workers = o.workers;
  const SweepResult r = run_sweep(g, s);
  write_sweep_outputs(r, o.out_dir);
  int failed = 0;
  for (const auto& c : r.cells) {
    if (!c.error.empty()) {
      ++failed;
      spdlog::warn("cell T_B={} delta_b={} failed: {}", c.max_buses, c.delta_b, c.error);
    }
  }
  std::cout << "cells: " << r.cells.size() << ", failed: " << failed << "\n";
  return 0;
}

int run_fixtures(const Options& o) {
  if (o.emit.empty()) {
    for (const auto& n : fixture_names()) std::cout << n << "\n";
    return 0;
  }
  emit(o, o.emit + ".grid", std::string(fixture_text(o.emit)));
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("gridthreat");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("GRIDTHREAT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Options o;
  CLI::App app{"Stealthy topology-aware load-redistribution attack analysis on DC grids"};
  app.name("gridthreat");
  app.require_subcommand(1);

  auto add_case = [&](CLI::App* sub) {
    sub->add_option("--case", o.case_path, "Case file")->required();
    sub->add_option("--out", o.out_dir, "Output directory (stdout when omitted)");
    sub->add_option("--slack", o.slack, "Slack bus id");
  };
  auto add_limits = [&](CLI::App* sub) {
    sub->add_option("--max-buses", o.max_buses, "Buses the attacker can reach (T_B)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--max-measurements", o.max_measurements,
                    "Measurements the attacker can alter")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--delta-b", o.delta_b, "Load shift limit, percent")->check(CLI::Range(0.0, 100.0));
    sub->add_option("--delta-l", o.delta_l, "Overload margin, percent")->check(CLI::Range(0.0, 100.0));
    sub->add_option("--line-fraction", o.line_fraction, "Share of lines to overload, percent")
        ->check(CLI::Range(0.0, 100.0));
    sub->add_option("--cost-budget", o.cost_budget,
                    "Dispatch cost bound in dollars (negative: pre-attack cost)");
  };

  auto* pf = app.add_subcommand("powerflow", "DC power flow table");
  add_case(pf);
  pf->add_option("--dispatch", o.dispatch_path, "CSV of bus,dispatch_pu (default: SCOPF dispatch)");

  auto* lo = app.add_subcommand("lodf", "Line outage distribution factors");
  add_case(lo);

  auto* es = app.add_subcommand("estimate", "Weighted least squares state estimation");
  add_case(es);
  es->add_option("--measurements", o.measurements_path,
                 "CSV of index,value (default: simulated from the SCOPF state)");
  es->add_option("--tau", o.tau, "Bad-data residual threshold");
  es->add_option("--noise", o.noise, "Noise sigma for simulated readings, pu")
      ->check(CLI::NonNegativeNumber);
  es->add_option("--seed", o.seed, "Noise seed");

  auto* sc = app.add_subcommand("scopf", "Security-constrained economic dispatch");
  add_case(sc);

  auto* sy = app.add_subcommand("synthesize", "Search for a stealthy overload attack");
  add_case(sy);
  add_limits(sy);
  sy->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* ve = app.add_subcommand("verify", "Replay an attack vector");
  add_case(ve);
  add_limits(ve);
  ve->add_option("--attack", o.attack_path, "Attack vector JSON")->required();
  ve->add_option("--tau", o.tau, "Bad-data residual threshold");

  auto* sw = app.add_subcommand("sweep", "Attack-space sweep over attacker capabilities");
  add_case(sw);
  sw->get_option("--out")->required()->description("Output directory");
  sw->add_option("--max-measurements", o.max_measurements, "Measurements the attacker can alter")
      ->check(CLI::NonNegativeNumber);
  sw->add_option("--cost-budget", o.cost_budget,
                 "Dispatch cost bound in dollars (negative: pre-attack cost)");
  sw->add_option("--max-buses", o.sweep_buses, "T_B values")->delimiter(',');
  sw->add_option("--delta-b", o.sweep_delta_b, "Load shift limits, percent")->delimiter(',');
  sw->add_option("--delta-l", o.sweep_delta_l, "Overload margins, percent")->delimiter(',');
  sw->add_option("--line-fraction", o.sweep_fraction, "Shares of lines to overload, percent")
      ->delimiter(',');
  sw->add_option("--secure", o.securing, "Securing policies: none, random, analytical")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "random", "analytical"}));
  sw->add_option("--secure-fraction", o.secure_fraction,
                 "Random policy: percent of taken measurements");
  sw->add_option("--secure-count", o.secure_count, "Random policy: exact count (overrides fraction)");
  sw->add_option("--top-k", o.top_k, "Analytical policy: buses to secure")
      ->check(CLI::PositiveNumber);
  sw->add_option("--repetitions", o.repetitions, "Seeds per random policy")
      ->check(CLI::PositiveNumber);
  sw->add_option("--seed", o.seed, "First seed");
  sw->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* fx = app.add_subcommand("fixtures", "List or write the bundled cases");
  fx->add_option("--emit", o.emit, "Fixture name to write");
  fx->add_option("--out", o.out_dir, "Output directory (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*pf) return run_powerflow(o);
    if (*lo) return run_lodf(o);
    if (*es) return run_estimate(o);
    if (*sc) return run_scopf(o);
    if (*sy) return run_synthesize(o);
    if (*ve) return run_verify(o);
    if (*sw) return run_sweep_cmd(o);
    if (*fx) return run_fixtures(o);
  } catch (const InfeasibleError& e) {
    std::cerr << "gridthreat: error: " << e.what();
    if (!e.hint().empty()) std::cerr << " (" << e.hint() << ")";
    std::cerr << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gridthreat: error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
