// deltadimer: bound states and below-threshold scattering of a 1D dimer
// hitting a contact impurity, plus an independent time-dependent
// wave-packet solver for cross-checks.
//
// All quantities are dimensionless: a = 1, m1 = 1, hbar = 1.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deltadimer/bound.hpp"
#include "deltadimer/kernel.hpp"
#include "deltadimer/params.hpp"
#include "deltadimer/quadrature.hpp"
#include "deltadimer/scatter.hpp"
#include "deltadimer/wavepacket.hpp"

namespace {

using nlohmann::json;

std::string fmt12(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

struct Options {
  std::string command;
  double mass_ratio = 1.0;       // m2 / m1
  std::string a1_ratio = "";     // a1 / a, or "off"
  double Pa = 0;                 // incident momentum in units of 1/a
  std::string axis = "P";        // sweep axis: P | a1_ratio
  std::string range;             // sweep lo:hi:step
  std::string values;            // sweep explicit comma list
  std::string parity = "even";
  double E_ratio = 2.0;          // kernel-dump energy as a multiple of eps
  std::size_t grid_n = 300;
  std::size_t quad_n = 400;
  double scale = 0;              // momentum-map scale; 0 = auto
  unsigned jobs = 0;             // 0 = DELTADIMER_JOBS or 1
  std::string output = "-";
  std::string format = "csv";
  // oracle knobs, lengths in a, times in m1 a^2
  double sigma = 4.0;
  double x0 = 0;                 // 0 = -4 sigma
  double w = 0.05;
  double dt = 0;                 // 0 = potential phase budget
  double LX = 0, Lr = 0;         // 0 = derived
  double t_max = 0;              // 0 = derived
  bool no_absorbers = false;
  std::string snapshots;
};

std::optional<double> parse_a1(const std::string& s) {
  if (s == "off") return std::nullopt;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("a1_ratio must be a number or 'off'");
  }
  if (used != s.size()) throw std::invalid_argument("a1_ratio must be a number or 'off'");
  return v;
}

dimer::Parity parse_parity(const std::string& s) {
  if (s == "even") return dimer::Parity::even;
  if (s == "odd") return dimer::Parity::odd;
  throw std::invalid_argument("parity must be 'even' or 'odd'");
}

std::vector<double> sweep_values(const Options& opt) {
  std::vector<double> vals;
  if (!opt.range.empty() && !opt.values.empty())
    throw std::invalid_argument("give either --range or --values, not both");
  if (!opt.range.empty()) {
    double lo = 0, hi = 0, step = 0;
    const auto c1 = opt.range.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : opt.range.find(':', c1 + 1);
    if (c2 == std::string::npos) throw std::invalid_argument("--range wants lo:hi:step");
    try {
      lo = std::stod(opt.range.substr(0, c1));
      hi = std::stod(opt.range.substr(c1 + 1, c2 - c1 - 1));
      step = std::stod(opt.range.substr(c2 + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("--range wants lo:hi:step");
    }
    if (!(step > 0) || hi < lo) throw std::invalid_argument("--range wants lo <= hi, step > 0");
    for (double v = lo; v <= hi + 0.5 * step; v += step) vals.push_back(v);
    // Snap the endpoints so accumulated rounding cannot drop or invent a row.
    if (!vals.empty() && std::abs(vals.back() - hi) < 1e-9 * std::max(1.0, std::abs(hi)))
      vals.back() = hi;
  } else if (!opt.values.empty()) {
    std::size_t pos = 0;
    while (pos <= opt.values.size()) {
      const auto comma = opt.values.find(',', pos);
      const auto tok = opt.values.substr(pos, comma == std::string::npos ? std::string::npos
                                                                         : comma - pos);
      if (tok.empty()) throw std::invalid_argument("--values has an empty entry");
      vals.push_back(std::stod(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  } else {
    throw std::invalid_argument("sweep needs --range or --values");
  }
  if (vals.empty()) throw std::invalid_argument("sweep value list is empty");
  return vals;
}

json config_echo(const Options& o) {
  json j;
  j["command"] = o.command;
  j["mass_ratio"] = o.mass_ratio;
  j["a1_ratio"] = o.a1_ratio.empty() ? "unset" : o.a1_ratio;
  j["grid_n"] = o.grid_n;
  j["quad_n"] = o.quad_n;
  j["scale"] = o.scale;
  j["format"] = o.format;
  if (o.command == "scatter" || o.command == "oracle") j["Pa"] = o.Pa;
  if (o.command == "sweep") {
    j["axis"] = o.axis;
    if (!o.range.empty()) j["range"] = o.range;
    if (!o.values.empty()) j["values"] = o.values;
    if (o.axis == "a1_ratio") j["Pa"] = o.Pa;
    j["jobs"] = o.jobs;
  }
  if (o.command == "bound" || o.command == "kernel-dump") j["parity"] = o.parity;
  if (o.command == "kernel-dump") j["E_ratio"] = o.E_ratio;
  if (o.command == "oracle") {
    j["sigma"] = o.sigma;
    j["x0"] = o.x0;
    j["w"] = o.w;
    j["dt"] = o.dt;
    j["LX"] = o.LX;
    j["Lr"] = o.Lr;
    j["t_max"] = o.t_max;
    j["absorbers"] = !o.no_absorbers;
    if (!o.snapshots.empty()) j["snapshots"] = o.snapshots;
  }
  return j;
}

void write_out(const Options& opt, const std::string& text) {
  if (opt.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(opt.output, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + opt.output);
  f << text;
}

std::string csv_preamble(const Options& opt) {
  std::string s = "# deltadimer v1\n";
  s += "# config: " + config_echo(opt).dump() + "\n";
  return s;
}

std::string json_wrap(const Options& opt, json result) {
  json j;
  j["tool"] = "deltadimer";
  j["format_version"] = 1;
  j["config"] = config_echo(opt);
  j["result"] = std::move(result);
  return j.dump(2) + "\n";
}

dimer::PhysicalParams make_params(const Options& opt) {
  if (opt.a1_ratio.empty())
    throw std::invalid_argument("this command needs --a1_ratio (a number or 'off')");
  return dimer::new_params(1.0, opt.mass_ratio, 1.0, parse_a1(opt.a1_ratio));
}

int cmd_bound(const Options& opt) {
  const auto par = make_params(opt);
  dimer::BoundOptions bo;
  bo.grid_n = opt.grid_n;
  bo.quad_n = opt.quad_n;
  bo.scale = opt.scale;
  const auto res = dimer::solve_bound_state(par, parse_parity(opt.parity), bo);

  if (opt.format == "json") {
    json r;
    if (!res) {
      r["bound_state"] = "none";
    } else {
      r["energy_ratio"] = res->energy / par.eps;
      r["residual"] = res->lambda_residual;
      r["grid_n"] = res->grid.n;
      r["parity"] = opt.parity;
      json p = json::array(), c = json::array();
      for (std::size_t i = 0; i < res->grid.n; ++i) {
        p.push_back(res->grid.nodes[i]);
        c.push_back(res->c(static_cast<Eigen::Index>(i)));
      }
      r["p"] = std::move(p);
      r["c_plus"] = std::move(c);
    }
    write_out(opt, json_wrap(opt, std::move(r)));
    return 0;
  }
  std::string s = csv_preamble(opt);
  if (!res) {
    s += "# result: {\"bound_state\":\"none\"}\n";
    s += "p,c_plus\n";
  } else {
    json meta;
    meta["energy_ratio"] = res->energy / par.eps;
    meta["residual"] = res->lambda_residual;
    meta["grid_n"] = res->grid.n;
    s += "# result: " + meta.dump() + "\n";
    s += "p,c_plus\n";
    for (std::size_t i = 0; i < res->grid.n; ++i)
      s += fmt12(res->grid.nodes[i]) + "," +
           fmt12(res->c(static_cast<Eigen::Index>(i))) + "\n";
  }
  write_out(opt, s);
  return 0;
}

std::string sweep_csv_row(double value, const dimer::SweepRow& r) {
  std::string s = fmt12(value);
  s += "," + fmt12(r.R) + "," + fmt12(r.T);
  s += "," + fmt12(r.f_even_onshell.real()) + "," + fmt12(r.f_even_onshell.imag());
  s += "," + fmt12(r.f_odd_onshell.real()) + "," + fmt12(r.f_odd_onshell.imag());
  s += "," + fmt12(r.unitarity_defect);
  s += r.shaded ? ",1\n" : ",0\n";
  return s;
}

constexpr const char* kSweepHeader =
    "value,R,T,Re_f_even,Im_f_even,Re_f_odd,Im_f_odd,unitarity_defect,shaded\n";

int cmd_scatter(const Options& opt) {
  const auto par = make_params(opt);
  const auto res = dimer::solve_scattering(par, opt.Pa, opt.grid_n, opt.quad_n, opt.scale);
  if (opt.format == "json") {
    json r;
    r["Pa"] = res.P;
    r["E"] = res.E;
    r["R"] = res.R;
    r["T"] = res.T;
    r["f_even"] = {res.f_even_onshell.real(), res.f_even_onshell.imag()};
    r["f_odd"] = {res.f_odd_onshell.real(), res.f_odd_onshell.imag()};
    r["r_amp"] = {res.r_amp.real(), res.r_amp.imag()};
    r["t_amp"] = {res.t_amp.real(), res.t_amp.imag()};
    r["unitarity_defect"] = res.unitarity_defect;
    r["rcond"] = res.rcond;
    write_out(opt, json_wrap(opt, std::move(r)));
    return 0;
  }
  dimer::SweepRow row;
  row.value = res.P;
  row.R = res.R;
  row.T = res.T;
  row.f_even_onshell = res.f_even_onshell;
  row.f_odd_onshell = res.f_odd_onshell;
  row.unitarity_defect = res.unitarity_defect;
  std::string s = csv_preamble(opt) + kSweepHeader + sweep_csv_row(res.P, row);
  write_out(opt, s);
  return 0;
}

int cmd_sweep(const Options& opt) {
  dimer::SweepAxis axis;
  if (opt.axis == "P") {
    axis = dimer::SweepAxis::P;
  } else if (opt.axis == "a1_ratio") {
    axis = dimer::SweepAxis::a1_ratio;
  } else {
    throw std::invalid_argument("sweep axis must be 'P' or 'a1_ratio'");
  }
  dimer::PhysicalParams base =
      axis == dimer::SweepAxis::P ? make_params(opt)
                                  : dimer::new_params(1.0, opt.mass_ratio, 1.0, 1.0);
  if (axis == dimer::SweepAxis::a1_ratio && !(opt.Pa > 0))
    throw std::invalid_argument("sweep over a1_ratio needs a fixed --Pa > 0");

  const auto vals = sweep_values(opt);
  dimer::SweepOptions so;
  so.grid_n = opt.grid_n;
  so.quad_n = opt.quad_n;
  so.scale = opt.scale;
  so.jobs = opt.jobs == 0 ? 1 : opt.jobs;
  const auto rows = dimer::sweep(base, axis, vals, opt.Pa, so);

  if (opt.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      json e;
      e["value"] = r.value;
      if (r.shaded) {
        e["shaded"] = true;
      } else {
        e["R"] = r.R;
        e["T"] = r.T;
        e["f_even"] = {r.f_even_onshell.real(), r.f_even_onshell.imag()};
        e["f_odd"] = {r.f_odd_onshell.real(), r.f_odd_onshell.imag()};
        e["unitarity_defect"] = r.unitarity_defect;
        e["shaded"] = false;
      }
      arr.push_back(std::move(e));
    }
    write_out(opt, json_wrap(opt, {{"rows", std::move(arr)}}));
    return 0;
  }
  std::string s = csv_preamble(opt) + kSweepHeader;
  for (const auto& r : rows) s += sweep_csv_row(r.value, r);
  write_out(opt, s);
  return 0;
}

int cmd_kernel_dump(const Options& opt) {
  const auto par = make_params(opt);
  if (!(opt.E_ratio > 0))
    throw std::invalid_argument("kernel-dump needs --E-ratio > 0 (E = ratio * eps < 0)");
  const double E = opt.E_ratio * par.eps;
  const double sc = opt.scale > 0
                        ? opt.scale
                        : std::max(par.a, par.a1 ? std::abs(*par.a1) : 0.0);
  const auto grid = dimer::build_grid(opt.grid_n, sc);
  const auto K =
      dimer::kernel_matrix(grid, E, par, parse_parity(opt.parity), opt.quad_n);

  if (opt.format == "json") {
    json r;
    r["E"] = E;
    r["parity"] = opt.parity;
    json nodes = json::array();
    for (const double p : grid.nodes) nodes.push_back(p);
    r["nodes"] = std::move(nodes);
    json m = json::array();
    for (std::size_t i = 0; i < grid.n; ++i) {
      json rowj = json::array();
      for (std::size_t j = 0; j < grid.n; ++j)
        rowj.push_back(K.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      m.push_back(std::move(rowj));
    }
    r["entries"] = std::move(m);
    write_out(opt, json_wrap(opt, std::move(r)));
    return 0;
  }
  std::string s = csv_preamble(opt) + "p,s,value\n";
  for (std::size_t i = 0; i < grid.n; ++i)
    for (std::size_t j = 0; j < grid.n; ++j)
      s += fmt12(grid.nodes[i]) + "," + fmt12(grid.nodes[j]) + "," +
           fmt12(K.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + "\n";
  write_out(opt, s);
  return 0;
}

int cmd_oracle(const Options& opt) {
  const auto par = make_params(opt);
  const double sigma = opt.sigma;
  const double x0 = opt.x0 != 0 ? opt.x0 : -4.0 * sigma;

  dimer::OracleConfig cfg;
  cfg.w = opt.w;
  cfg.LX = opt.LX;
  cfg.Lr = opt.Lr;
  cfg.absorbers = !opt.no_absorbers;
  auto st = dimer::prepare_packet(par, opt.Pa, x0, sigma, cfg);

  const double dt = opt.dt > 0
                        ? opt.dt
                        : 0.15 / ((std::abs(par.g) + std::abs(par.g1)) *
                                  dimer::regulated_delta(0.0, st.w));
  const double v0 = opt.Pa / par.M;
  const double t_max = opt.t_max > 0 ? opt.t_max : 4.0 * (st.LX + std::abs(x0)) / v0;
  const auto chunk = static_cast<std::size_t>(std::ceil(1.0 / (v0 * dt)));

  while (st.t < t_max) {
    dimer::propagate(st, par, st.w, dt, chunk);
    // Leave margin below the measurement gate so the final answer is clean.
    if (st.t > std::abs(x0) / v0 && dimer::separation_residual(st, par) < 5e-5) break;
  }
  const auto m = dimer::measure_RT(st, par);

  json r;
  r["R"] = m.R;
  r["T"] = m.T;
  r["trapped"] = m.trapped;
  r["norm_drift"] = m.norm_drift;
  json p;
  p["Pa"] = opt.Pa;
  p["sigma"] = sigma;
  p["x0"] = x0;
  p["w"] = st.w;
  p["dt"] = dt;
  p["LX"] = st.LX;
  p["Lr"] = st.Lr;
  p["nX"] = st.nX;
  p["nr"] = st.nr;
  p["absorbers"] = st.absorbers;
  p["t_final"] = st.t;
  p["E0"] = st.E0;
  p["eps_w"] = st.eps_w;
  r["parameters"] = std::move(p);
  write_out(opt, json_wrap(opt, std::move(r)));

  if (!opt.snapshots.empty()) {
    std::string s = "# deltadimer v1\n# config: " + config_echo(opt).dump() + "\nX,rho\n";
    const auto rho = dimer::x_marginal(st);
    for (std::size_t i = 0; i < st.nX; ++i) {
      const double X = -st.LX + st.dX * static_cast<double>(i);
      s += fmt12(X) + "," + fmt12(rho[i]) + "\n";
    }
    std::ofstream f(opt.snapshots, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open snapshot file: " + opt.snapshots);
    f << s;
  }
  return 0;
}

int error_exit(const std::string& type, const std::string& message, int code) {
  json e;
  e["error"] = {{"type", type}, {"message", message}};
  std::cout << e.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  std::string config_path;

  CLI::App app{"dimer-impurity bound states and below-threshold scattering"};
  app.require_subcommand(1);
  std::map<std::string, CLI::Option*> opts;  // keyed by config-file name

  const auto add_common = [&](CLI::App* cmd) {
    const std::string tag = cmd->get_name() + ".";
    opts[tag + "mass_ratio"] =
        cmd->add_option("--mass-ratio", opt.mass_ratio, "m2/m1 (default 1)");
    opts[tag + "a1_ratio"] =
        cmd->add_option("--a1_ratio", opt.a1_ratio, "a1/a, or 'off'");
    opts[tag + "grid_n"] = cmd->add_option("--grid-n", opt.grid_n, "momentum nodes (300)");
    opts[tag + "quad_n"] = cmd->add_option("--quad-n", opt.quad_n, "kernel quadrature (400)");
    opts[tag + "scale"] = cmd->add_option("--scale", opt.scale, "momentum map scale (auto)");
    opts[tag + "output"] = cmd->add_option("--output,-o", opt.output, "file or - (stdout)");
    opts[tag + "format"] =
        cmd->add_option("--format", opt.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--config", config_path, "JSON file with option defaults");
  };

  CLI::App* bound = app.add_subcommand("bound", "trimer bound state");
  add_common(bound);
  opts["bound.parity"] = bound->add_option("--parity", opt.parity, "even|odd");

  CLI::App* scatter = app.add_subcommand("scatter", "one scattering solve");
  add_common(scatter);
  opts["scatter.Pa"] = scatter->add_option("--Pa", opt.Pa, "incident momentum * a");

  CLI::App* sweep = app.add_subcommand("sweep", "scan P or a1_ratio");
  add_common(sweep);
  opts["sweep.axis"] = sweep->add_option("--axis", opt.axis, "P|a1_ratio");
  opts["sweep.range"] = sweep->add_option("--range", opt.range, "lo:hi:step");
  opts["sweep.values"] = sweep->add_option("--values", opt.values, "comma list");
  opts["sweep.Pa"] = sweep->add_option("--Pa", opt.Pa, "fixed P for axis a1_ratio");
  opts["sweep.jobs"] = sweep->add_option("--jobs", opt.jobs, "worker threads");

  CLI::App* oracle = app.add_subcommand("oracle", "time-dependent wave packet");
  add_common(oracle);
  opts["oracle.Pa"] = oracle->add_option("--Pa", opt.Pa, "packet momentum * a");
  opts["oracle.sigma"] = oracle->add_option("--sigma", opt.sigma, "packet width / a (4)");
  opts["oracle.x0"] = oracle->add_option("--x0", opt.x0, "start position / a (-4 sigma)");
  opts["oracle.w"] = oracle->add_option("--w", opt.w, "regulator width / a (0.05)");
  opts["oracle.dt"] = oracle->add_option("--dt", opt.dt, "time step (auto)");
  opts["oracle.LX"] = oracle->add_option("--LX", opt.LX, "half box in X / a (auto)");
  opts["oracle.Lr"] = oracle->add_option("--Lr", opt.Lr, "half box in r / a (auto)");
  opts["oracle.t_max"] = oracle->add_option("--t-max", opt.t_max, "time budget (auto)");
  opts["oracle.no_absorbers"] =
      oracle->add_flag("--no-absorbers", opt.no_absorbers, "hard box edges");
  opts["oracle.snapshots"] =
      oracle->add_option("--snapshots", opt.snapshots, "write final X marginal CSV here");

  CLI::App* kdump = app.add_subcommand("kernel-dump", "sampled kernel matrix");
  add_common(kdump);
  opts["kernel-dump.parity"] = kdump->add_option("--parity", opt.parity, "even|odd");
  opts["kernel-dump.E_ratio"] =
      kdump->add_option("--E-ratio", opt.E_ratio, "E as a multiple of eps (2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    return error_exit("usage", e.what(), 2);
  }

  CLI::App* active = app.get_subcommands().front();
  opt.command = active->get_name();

  try {
    // Config file: strict keys, command line wins.
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw std::invalid_argument("cannot open config file: " + config_path);
      json cfg;
      try {
        cfg = json::parse(f);
      } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config file is not valid JSON: ") + e.what());
      }
      if (!cfg.is_object()) throw std::invalid_argument("config file must hold a JSON object");
      const std::string tag = opt.command + ".";
      for (const auto& [key, val] : cfg.items()) {
        const auto it = opts.find(tag + key);
        if (it == opts.end())
          throw std::invalid_argument("unknown config key for " + opt.command + ": " + key);
        if (it->second->count() > 0) continue;  // explicit flag beats the file
        const std::string text = val.is_string() ? val.get<std::string>() : val.dump();
        it->second->add_result(text);
        it->second->run_callback();
      }
    }
    if (opt.jobs == 0) {
      if (const char* env = std::getenv("DELTADIMER_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) opt.jobs = static_cast<unsigned>(v);
      }
    }

    if (opt.command == "bound") return cmd_bound(opt);
    if (opt.command == "scatter") return cmd_scatter(opt);
    if (opt.command == "sweep") return cmd_sweep(opt);
    if (opt.command == "oracle") return cmd_oracle(opt);
    if (opt.command == "kernel-dump") return cmd_kernel_dump(opt);
    return error_exit("usage", "unknown command", 2);
  } catch (const std::invalid_argument& e) {
    return error_exit("usage", e.what(), 2);
  } catch (const std::domain_error& e) {
    return error_exit("domain", e.what(), 2);
  } catch (const std::exception& e) {
    return error_exit("internal", e.what(), 1);
  }
}
