// photon-filter: command-line front end for the photon-number filtering
// library. Builds initial field states, applies measurement sequences,
// compares numeric propagation against the closed-form filters, and runs
// parameter sweeps, emitting deterministic CSV or JSON.
//
// Exit codes: 0 success, 2 validation/config error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <photonfilter/photonfilter.hpp>

namespace pf = photonfilter;
using nlohmann::json;

namespace {

struct CliError {
  int code;
  std::string msg;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw CliError{code, msg}; }

struct Flags {
  std::optional<std::string> model_type;
  std::optional<double> g0, A0, T, lambda, nbar, window;
  std::optional<std::string> sequence, case_name, out, format, grid, config_path;
  std::vector<int> m;
};

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(2, "cannot read config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(2, std::string("bad JSON in config file: ") + e.what());
  }
  if (!j.is_object()) fail(2, "config file must hold a JSON object");
  return j;
}

// Precedence for scalar parameters: command-line flag, then top-level
// config key, then the same key inside the config's "model" object.
std::optional<double> phys_opt(const std::optional<double>& flag, const json& cfg,
                               const char* key) {
  if (flag) return flag;
  if (cfg.contains(key)) {
    if (!cfg.at(key).is_number()) fail(2, std::string("config key '") + key + "' must be a number");
    return cfg.at(key).get<double>();
  }
  if (cfg.contains("model") && cfg.at("model").is_object() && cfg.at("model").contains(key)) {
    const json& v = cfg.at("model").at(key);
    if (!v.is_number()) fail(2, std::string("model field '") + key + "' must be a number");
    return v.get<double>();
  }
  return std::nullopt;
}

double phys_req(const std::optional<double>& flag, const json& cfg, const char* key) {
  auto v = phys_opt(flag, cfg, key);
  if (!v) fail(2, std::string("missing parameter: --") + key);
  return *v;
}

std::optional<std::string> str_opt(const std::optional<std::string>& flag, const json& cfg,
                                   const char* key) {
  if (flag) return flag;
  if (cfg.contains(key)) {
    if (!cfg.at(key).is_string()) fail(2, std::string("config key '") + key + "' must be a string");
    return cfg.at(key).get<std::string>();
  }
  return std::nullopt;
}

std::vector<int> m_list(const Flags& flags, const json& cfg) {
  if (!flags.m.empty()) return flags.m;
  if (cfg.contains("m")) {
    try {
      if (cfg.at("m").is_array()) return cfg.at("m").get<std::vector<int>>();
      return {cfg.at("m").get<int>()};
    } catch (const json::exception&) {
      fail(2, "config key 'm' must be an integer or array of integers");
    }
  }
  return {};
}

pf::PulseModel resolve_model(const Flags& flags, const json& cfg,
                             const char* default_type) {
  json mj = json::object();
  if (cfg.contains("model")) {
    const json& m = cfg.at("model");
    if (m.is_string())
      mj["type"] = m.get<std::string>();
    else if (m.is_object())
      mj = m;
    else
      fail(2, "config key 'model' must be a string or object");
  }
  if (flags.model_type) mj["type"] = *flags.model_type;
  auto set_num = [&](const char* key, const std::optional<double>& flag) {
    if (flag) mj[key] = *flag;
    else if (!mj.contains(key) && cfg.contains(key) && cfg.at(key).is_number())
      mj[key] = cfg.at(key);
  };
  set_num("g0", flags.g0);
  set_num("A0", flags.A0);
  set_num("T", flags.T);
  set_num("lambda", flags.lambda);
  if (!mj.contains("type")) {
    if (!default_type) fail(2, "no pulse model specified (use --model or a config file)");
    mj["type"] = default_type;
  }
  try {
    return pf::pulse_from_json(mj);
  } catch (const std::exception& e) {
    fail(2, std::string("bad pulse model: ") + e.what());
  }
}

pf::PhotonDistribution resolve_state(const Flags& flags, const json& cfg) {
  json sj = json{{"type", "coherent"}};
  if (cfg.contains("state")) {
    if (!cfg.at("state").is_object() || !cfg.at("state").contains("type"))
      fail(2, "config key 'state' must be an object with a 'type'");
    sj = cfg.at("state");
  }
  if (auto nbar = phys_opt(flags.nbar, cfg, "nbar")) sj["nbar"] = *nbar;
  std::string type = sj.at("type").get<std::string>();
  try {
    if (type == "coherent" || type == "thermal") {
      if (!sj.contains("nbar")) fail(2, "initial state needs --nbar");
      double nbar = sj.at("nbar").get<double>();
      return type == "coherent" ? pf::PhotonDistribution::coherent(nbar)
                                : pf::PhotonDistribution::thermal(nbar);
    }
    if (type == "fock") {
      if (!sj.contains("n")) fail(2, "fock state needs field 'n' in the config");
      return pf::PhotonDistribution::fock(sj.at("n").get<int>());
    }
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    fail(2, std::string("bad initial state: ") + e.what());
  }
  fail(2, "unknown state type '" + type + "'");
}

std::vector<double> parse_grid(const std::string& s) {
  std::size_t p1 = s.find(':');
  std::size_t p2 = p1 == std::string::npos ? std::string::npos : s.find(':', p1 + 1);
  if (p2 == std::string::npos) fail(2, "grid must be start:stop:count, got '" + s + "'");
  double start, stop;
  long count;
  try {
    std::size_t used = 0;
    std::string a = s.substr(0, p1), b = s.substr(p1 + 1, p2 - p1 - 1), c = s.substr(p2 + 1);
    start = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    stop = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    count = std::stol(c, &used);
    if (used != c.size()) throw std::invalid_argument(c);
  } catch (const std::exception&) {
    fail(2, "grid must be start:stop:count, got '" + s + "'");
  }
  if (!(std::isfinite(start) && std::isfinite(stop)) || count < 1 || count > 1'000'000)
    fail(2, "bad grid '" + s + "'");
  std::vector<double> v(static_cast<std::size_t>(count));
  if (count == 1) {
    v[0] = start;
  } else {
    for (long i = 0; i < count; ++i)
      v[static_cast<std::size_t>(i)] =
          start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return v;
}

std::vector<int> integer_grid(const std::vector<double>& grid, int lo, const char* what) {
  std::vector<int> out;
  out.reserve(grid.size());
  for (double x : grid) {
    long n = std::lround(x);
    if (n < lo || n > 1'000'000) fail(2, std::string(what) + ": grid value out of range");
    out.push_back(static_cast<int>(n));
  }
  return out;
}

pf::AtomInjectionCase resolve_case(const Flags& flags, const json& cfg) {
  std::string c = str_opt(flags.case_name, cfg, "case").value_or("a");
  if (c == "a" || c == "A") return pf::AtomInjectionCase::CaseA;
  if (c == "b" || c == "B") return pf::AtomInjectionCase::CaseB;
  fail(2, "--case must be 'a' or 'b'");
}

std::string resolve_format(const Flags& flags, const json& cfg) {
  std::string f = str_opt(flags.format, cfg, "format").value_or("csv");
  if (f != "csv" && f != "json") fail(2, "--format must be 'csv' or 'json'");
  return f;
}

pf::IntegrationConfig resolve_window(const Flags& flags, const json& cfg,
                                     const pf::PulseModel& model) {
  double mult = phys_opt(flags.window, cfg, "window").value_or(20.0);
  pf::IntegrationConfig ic;
  try {
    ic = pf::default_window(model, mult);
  } catch (const std::exception& e) {
    fail(2, std::string("bad --window: ") + e.what());
  }
  if (auto r = phys_opt(std::nullopt, cfg, "rel_tol")) ic.rel_tol = *r;
  if (auto a = phys_opt(std::nullopt, cfg, "abs_tol")) ic.abs_tol = *a;
  return ic;
}

std::string model_record(const pf::PulseModel& model) { return pf::to_json(model).dump(); }

std::string render_table(const pf::SweepTable& table, const std::string& format) {
  std::ostringstream os;
  if (format == "csv") {
    pf::write_csv(table, os);
  } else {
    os << pf::to_json(table).dump(2) << '\n';
  }
  return os.str();
}

struct CmdResult {
  std::string bytes;
  int code = 0;
};

// --- filter ---------------------------------------------------------------
// With an initial state: apply the recorded sequence and emit the filtered
// distribution. Without one: emit the m-fold filter functions on an
// integer-n grid, one column per requested m.

CmdResult cmd_filter(const Flags& flags, const json& cfg) {
  pf::PulseModel model = resolve_model(flags, cfg, nullptr);
  if (std::holds_alternative<pf::TabulatedPulse>(model))
    fail(2, "tabulated pulses have no closed-form filter; use 'evolve'");
  std::string format = resolve_format(flags, cfg);

  bool has_state = phys_opt(flags.nbar, cfg, "nbar").has_value() || cfg.contains("state");
  if (has_state) {
    pf::PhotonDistribution input = resolve_state(flags, cfg);
    pf::AtomInjectionCase injection = resolve_case(flags, cfg);
    std::optional<std::string> seq_str = str_opt(flags.sequence, cfg, "sequence");
    pf::MeasurementSequence seq;
    if (seq_str) {
      seq = pf::parse_sequence(*seq_str);
    } else {
      std::vector<int> ms = m_list(flags, cfg);
      if (ms.size() != 1 || ms[0] < 0)
        fail(2, "filter with a state needs --sequence or a single --m >= 0");
      seq.assign(static_cast<std::size_t>(ms[0]), pf::Outcome::Minus);
    }
    pf::FilteredState fs = pf::apply_sequence(input, model, seq, injection);

    json state_rec = json{{"n_max", input.n_max()}};
    if (auto nbar = phys_opt(flags.nbar, cfg, "nbar")) state_rec["nbar"] = *nbar;
    std::vector<std::pair<std::string, std::string>> params = {
        {"command", "filter"},
        {"model", model_record(model)},
        {"state", state_rec.dump()},
        {"sequence", pf::sequence_to_string(seq)},
        {"case", injection == pf::AtomInjectionCase::CaseA ? "a" : "b"}};

    std::ostringstream os;
    if (format == "csv") {
      os << "# " << pf::project_name << ' ' << pf::version << '\n';
      for (const auto& [k, v] : params) os << "# " << k << " = " << v << '\n';
      pf::write_csv(fs, os);
    } else {
      json j = pf::to_json(fs);
      json pj = json::object();
      for (const auto& [k, v] : params) pj[k] = v;
      pj["version"] = pf::version;
      j["params"] = pj;
      os << j.dump(2) << '\n';
    }
    return {os.str(), 0};
  }

  std::vector<int> ms = m_list(flags, cfg);
  if (ms.empty()) ms = {1};
  for (int m : ms)
    if (m < 0) fail(2, "--m must be >= 0");
  std::string grid_str = str_opt(flags.grid, cfg, "grid").value_or("0:60:61");
  std::vector<int> ns = integer_grid(parse_grid(grid_str), 0, "filter");
  int n_hi = 0;
  for (int n : ns) n_hi = std::max(n_hi, n);
  pf::FilterTable table = pf::FilterTable::analytic(model, n_hi);

  pf::SweepTable out;
  out.axis_name = "n";
  out.axis.assign(ns.begin(), ns.end());
  for (int m : ms) {
    std::vector<double> col;
    col.reserve(ns.size());
    for (int n : ns) col.push_back(std::pow(table.survival(n), m));
    out.columns.emplace_back("filter_m" + std::to_string(m), std::move(col));
  }
  out.fixed_params = {{"command", "filter"},
                      {"model", model_record(model)},
                      {"grid", grid_str}};
  return {render_table(out, format), 0};
}

// --- evolve ----------------------------------------------------------------
// Numeric propagation per family versus the closed-form filter.

CmdResult cmd_evolve(const Flags& flags, const json& cfg) {
  pf::PulseModel model = resolve_model(flags, cfg, nullptr);
  std::string format = resolve_format(flags, cfg);
  std::string grid_str = str_opt(flags.grid, cfg, "grid").value_or("1:30:30");
  std::vector<int> ns = integer_grid(parse_grid(grid_str), 1, "evolve");
  pf::IntegrationConfig ic = resolve_window(flags, cfg, model);
  bool average_tail = std::holds_alternative<pf::LZParams>(model);
  bool analytic_known = !std::holds_alternative<pf::TabulatedPulse>(model);

  std::vector<double> numeric, analytic, abs_err;
  int failures = 0;
  double max_err = 0.0;
  for (int n : ns) {
    double num = std::nan("");
    try {
      num = pf::numeric_lower_filter(n, model, ic, average_tail);
    } catch (const pf::integration_error& e) {
      ++failures;
      std::cerr << "evolve: family " << n << ": " << e.what() << '\n';
    }
    double ana = analytic_known ? pf::case_a_filter(n, model).lower : std::nan("");
    double err = std::abs(num - ana);
    numeric.push_back(num);
    analytic.push_back(ana);
    abs_err.push_back(err);
    if (!std::isnan(err)) max_err = std::max(max_err, err);
  }

  pf::SweepTable out;
  out.axis_name = "n";
  out.axis.assign(ns.begin(), ns.end());
  out.columns = {{"numeric_lower", std::move(numeric)},
                 {"analytic_lower", std::move(analytic)},
                 {"abs_error", std::move(abs_err)}};
  out.fixed_params = {{"command", "evolve"},
                      {"model", model_record(model)},
                      {"grid", grid_str},
                      {"t_start", pf::detail::format_g17(ic.t_start)},
                      {"t_end", pf::detail::format_g17(ic.t_end)},
                      {"rel_tol", pf::detail::format_g17(ic.rel_tol)},
                      {"abs_tol", pf::detail::format_g17(ic.abs_tol)},
                      {"tail_averaged", average_tail ? "true" : "false"},
                      {"max_abs_error", pf::detail::format_g17(max_err)}};
  return {render_table(out, format), failures == 0 ? 0 : 3};
}

// --- sweep-q ----------------------------------------------------------------

CmdResult cmd_sweep_q(const Flags& flags, const json& cfg) {
  std::string format = resolve_format(flags, cfg);
  double nbar = phys_req(flags.nbar, cfg, "nbar");
  double A0 = phys_req(flags.A0, cfg, "A0");
  double T = phys_req(flags.T, cfg, "T");
  std::vector<int> ms = m_list(flags, cfg);
  if (ms.size() != 1 || ms[0] < 0) fail(2, "sweep-q needs a single --m >= 0");
  std::string grid_str = str_opt(flags.grid, cfg, "grid").value_or("0.03:6:200");
  std::vector<double> g0s = parse_grid(grid_str);

  pf::SweepTable table;
  try {
    table = pf::q_sweep(nbar, ms[0], pf::DKParams(1.0, A0, T), g0s);
  } catch (const std::domain_error& e) {
    fail(2, std::string("sweep-q: ") + e.what());
  }
  table.fixed_params.insert(table.fixed_params.begin(), {"command", "sweep-q"});
  table.fixed_params.emplace_back("grid", grid_str);
  return {render_table(table, format), 0};
}

// --- widths -----------------------------------------------------------------
// With --nbar: sharpening-regime table (analytic widths vs the pipeline's
// numeric FWHM) for m = 1..M. Without: low-pass widths, exact vs leading
// order.

CmdResult cmd_widths(const Flags& flags, const json& cfg) {
  std::string format = resolve_format(flags, cfg);
  double g0 = phys_req(flags.g0, cfg, "g0");
  double A0 = phys_req(flags.A0, cfg, "A0");
  double T = phys_req(flags.T, cfg, "T");
  pf::DKParams p(g0, A0, T);
  std::vector<int> ms = m_list(flags, cfg);
  if (ms.empty()) ms = {25};
  if (ms.size() != 1 || ms[0] < 1) fail(2, "widths needs a single --m >= 1");
  int m_max = ms[0];

  pf::SweepTable out;
  out.axis_name = "m";
  for (int m = 1; m <= m_max; ++m) out.axis.push_back(m);

  auto nbar = phys_opt(flags.nbar, cfg, "nbar");
  if (nbar) {
    int k = static_cast<int>(std::lround(T * g0 * std::sqrt(*nbar)));
    if (k < 1) fail(2, "widths: state is centered below the first filter maximum");
    double n_m = pf::dk_maximum(k, p);
    pf::PhotonDistribution state = pf::PhotonDistribution::coherent(*nbar);
    pf::FilterTable table = pf::FilterTable::analytic(p, state.n_max() + 1);

    std::vector<double> xm, dna, dnp, dn, numeric, rel;
    for (int m = 1; m <= m_max; ++m) {
      state = pf::apply_outcome(state, table, pf::Outcome::Minus,
                                pf::AtomInjectionCase::CaseA)
                  .dist;
      pf::WidthEstimate w = pf::sharpening_width(m, p, n_m);
      double num = pf::fwhm_numeric(state).width;
      xm.push_back(w.x_m);
      dna.push_back(w.delta_n_a);
      dnp.push_back(w.delta_n_p);
      dn.push_back(w.delta_n);
      numeric.push_back(num);
      rel.push_back(std::abs(w.delta_n - num) / num);
    }
    out.columns = {{"x_m", std::move(xm)},           {"delta_n_a", std::move(dna)},
                   {"delta_n_p", std::move(dnp)},    {"delta_n", std::move(dn)},
                   {"fwhm_numeric", std::move(numeric)}, {"rel_dev", std::move(rel)}};
    out.fixed_params = {{"command", "widths"},
                        {"model", model_record(pf::PulseModel(p))},
                        {"nbar", pf::detail::format_g17(*nbar)},
                        {"k", std::to_string(k)},
                        {"n_m", pf::detail::format_g17(n_m)}};
  } else {
    std::vector<double> exact, approx;
    for (int m = 1; m <= m_max; ++m) {
      exact.push_back(pf::lowpass_width_exact(m, p));
      approx.push_back(pf::lowpass_width_approx(m, p));
    }
    out.columns = {{"delta_n_exact", std::move(exact)},
                   {"delta_n_approx", std::move(approx)}};
    out.fixed_params = {{"command", "widths"},
                        {"model", model_record(pf::PulseModel(p))}};
  }
  return {render_table(out, format), 0};
}

void emit(const std::string& bytes, const Flags& flags, const json& cfg) {
  std::optional<std::string> out = str_opt(flags.out, cfg, "out");
  if (!out) {
    std::cout << bytes;
    return;
  }
  std::ofstream f(*out, std::ios::binary);
  if (!f) fail(2, "cannot open output file: " + *out);
  f << bytes;
  f.flush();
  if (!f) fail(2, "failed writing output file: " + *out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photon-number filtering of a cavity mode by two-level atoms"};
  app.set_version_flag("--version",
                       std::string(pf::project_name) + " " + pf::version);
  app.require_subcommand(1);

  Flags flags;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--model", flags.model_type, "pulse model: lz, dk, tabulated");
    c->add_option("--g0", flags.g0, "coupling strength");
    c->add_option("--A0", flags.A0, "detuning amplitude (dk)");
    c->add_option("--T", flags.T, "pulse timescale (dk)");
    c->add_option("--lambda", flags.lambda, "detuning sweep rate (lz)");
    c->add_option("--nbar", flags.nbar, "mean photon number of the initial state");
    c->add_option("--sequence", flags.sequence,
                  "measurement record, e.g. '--+-' or 'm25'");
    c->add_option("--m", flags.m, "atom count(s)");
    c->add_option("--case", flags.case_name, "atom injection level: a (lower), b (upper)");
    c->add_option("--out", flags.out, "output file (default: stdout)");
    c->add_option("--format", flags.format, "output format: csv or json");
    c->add_option("--config", flags.config_path, "JSON config file; flags override it");
    c->add_option("--grid", flags.grid, "axis grid start:stop:count");
    c->add_option("--window", flags.window, "integration window in units of the pulse timescale");
  };

  CLI::App* c_filter = app.add_subcommand(
      "filter", "closed-form filter functions or a filtered distribution");
  CLI::App* c_evolve = app.add_subcommand(
      "evolve", "numeric propagation vs the closed-form filter per family");
  CLI::App* c_sweep = app.add_subcommand(
      "sweep-q", "Q-parameter of the filtered field over a g0 grid");
  CLI::App* c_widths = app.add_subcommand(
      "widths", "analytic width estimates vs m, with the numeric FWHM when --nbar is given");
  for (CLI::App* c : {c_filter, c_evolve, c_sweep, c_widths}) add_common(c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    json cfg = json::object();
    if (flags.config_path) cfg = load_config(*flags.config_path);
    CmdResult r;
    if (c_filter->parsed())
      r = cmd_filter(flags, cfg);
    else if (c_evolve->parsed())
      r = cmd_evolve(flags, cfg);
    else if (c_sweep->parsed())
      r = cmd_sweep_q(flags, cfg);
    else
      r = cmd_widths(flags, cfg);
    emit(r.bytes, flags, cfg);
    return r.code;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.msg << '\n';
    return e.code;
  } catch (const pf::integration_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const pf::no_solution_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const pf::impossible_outcome_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
}
