#pragma once

// Closed-form structure of the hyperbolic-sweep filter: locations of its
// maxima and zeros, width estimates for the photon-number sharpening and
// low-pass filtering regimes, and sweep drivers producing plot-ready
// tables.

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "field.hpp"
#include "filtering.hpp"
#include "pulses.hpp"
#include "util.hpp"
#include "version.hpp"

namespace photonfilter {

// The defining equation of a width has no root in the requested regime.
class no_solution_error : public std::runtime_error {
 public:
  explicit no_solution_error(const std::string& what) : std::runtime_error(what) {}
};

// Photon number of the filter's first maximum, (1 + T^2 A0^2)/(T^2 g0^2).
inline double dk_first_maximum(const DKParams& p) {
  return (1.0 + p.T * p.T * p.A0 * p.A0) / (p.T * p.T * p.g0 * p.g0);
}

// k-th maximum k^2/(T^2 g0^2) in the weak-adiabaticity approximation.
inline double dk_maximum(int k, const DKParams& p) {
  if (k < 0) throw std::domain_error("dk_maximum: k must be >= 0");
  double kk = static_cast<double>(k);
  return kk * kk / (p.T * p.T * p.g0 * p.g0);
}

// k-th zero (k + 1/2)^2/(T^2 g0^2) in the same approximation.
inline double dk_zero(int k, const DKParams& p) {
  if (k < 0) throw std::domain_error("dk_zero: k must be >= 0");
  double kh = static_cast<double>(k) + 0.5;
  return kh * kh / (p.T * p.T * p.g0 * p.g0);
}

// Angle x_m = arccos(0.5^{1/(2m)}) at which the m-fold filter drops to
// half maximum; pi/4 at m = 1, falling to 0 as m grows.
inline double half_max_angle(int m) {
  if (m < 1) throw std::domain_error("half_max_angle: m must be >= 1");
  return std::acos(std::pow(0.5, 1.0 / (2.0 * static_cast<double>(m))));
}

struct WidthEstimate {
  double n_m;        // photon number of the filter maximum
  double delta_n_a;  // FWHM of the m-fold filter alone
  double delta_n_p;  // FWHM of the Poissonian background
  double delta_n;    // combined FWHM of the filtered distribution
  double x_m;        // half-maximum angle (radians)
};

// Width estimates in the sharpening regime: a coherent state centered
// near the filter maximum n_m, filtered m times.
//   delta_n_a = 4 x_m sqrt(n_m)/(pi T g0),  delta_n_p = sqrt(8 n_m ln 2),
// combined in quadrature-reciprocal: delta_n^2 = a^2 p^2/(a^2 + p^2).
inline WidthEstimate sharpening_width(int m, const DKParams& p, double n_m) {
  if (!(std::isfinite(n_m) && n_m > 0.0))
    throw std::domain_error("sharpening_width: n_m must be > 0");
  double x = half_max_angle(m);
  double dna = 4.0 * x * std::sqrt(n_m) / (std::numbers::pi * p.T * p.g0);
  double dnp = std::sqrt(8.0 * n_m * std::numbers::ln2);
  double dn = dna * dnp / std::sqrt(dna * dna + dnp * dnp);
  return {n_m, dna, dnp, dn, x};
}

// Exact half-point of the m-fold low-pass filter: the root of
//   cosh^{2m}(pi T sqrt(A0^2 - g0^2 dn)) sech^{2m}(pi T A0) = e^{-1},
// solved in closed form. Requires cosh(pi T A0) e^{-1/(2m)} >= 1.
inline double lowpass_width_exact(int m, const DKParams& p) {
  if (m < 1) throw std::domain_error("lowpass_width_exact: m must be >= 1");
  double b = std::numbers::pi * p.T * p.A0;
  // log of y = cosh(b) e^{-1/(2m)}, overflow-free
  double log_y = b - std::numbers::ln2 + std::log1p(std::exp(-2.0 * b)) -
                 1.0 / (2.0 * static_cast<double>(m));
  if (log_y < 0.0)
    throw no_solution_error(
        "lowpass_width_exact: filter never drops to the 1/e point (threshold "
        "below hyperbolic range)");
  double acosh_y;
  if (log_y > 700.0) {
    acosh_y = log_y + std::numbers::ln2;  // acosh(y) ~ ln(2y)
  } else {
    double ym1 = std::expm1(log_y);
    acosh_y = std::log1p(ym1 + std::sqrt(ym1 * (ym1 + 2.0)));
  }
  double u = acosh_y / (std::numbers::pi * p.T);
  return (p.A0 * p.A0 - u * u) / (p.g0 * p.g0);
}

// Leading-order width of the same filter, A0/(pi g0^2 T m).
inline double lowpass_width_approx(int m, const DKParams& p) {
  if (m < 1) throw std::domain_error("lowpass_width_approx: m must be >= 1");
  return p.A0 / (std::numbers::pi * p.g0 * p.g0 * p.T * static_cast<double>(m));
}

struct AdiabaticAmplitude {
  double exact;       // sech^2(pi T A0)
  double asymptotic;  // 4 exp(-2 pi T A0)
};

// Oscillation amplitude of the filter above the detuning knee; small for
// large adiabaticity A0*T.
inline AdiabaticAmplitude adiabatic_amplitude(const DKParams& p) {
  double b = std::numbers::pi * p.T * p.A0;
  return {detail::sech_sq(b), 4.0 * std::exp(-2.0 * b)};
}

// --- sweep tables ---------------------------------------------------------

struct SweepTable {
  std::string axis_name;
  std::vector<double> axis;
  std::vector<std::pair<std::string, std::vector<double>>> columns;
  // Everything needed to re-run the sweep, pre-formatted.
  std::vector<std::pair<std::string, std::string>> fixed_params;
};

inline void write_csv(const SweepTable& table, std::ostream& os) {
  os << "# " << project_name << ' ' << version << '\n';
  for (const auto& [k, v] : table.fixed_params) os << "# " << k << " = " << v << '\n';
  os << table.axis_name;
  for (const auto& [name, col] : table.columns) {
    if (col.size() != table.axis.size())
      throw std::logic_error("SweepTable: ragged column '" + name + "'");
    os << ',' << name;
  }
  os << '\n';
  for (std::size_t i = 0; i < table.axis.size(); ++i) {
    os << detail::format_g17(table.axis[i]);
    for (const auto& [name, col] : table.columns) os << ',' << detail::format_g17(col[i]);
    os << '\n';
  }
}

inline nlohmann::json to_json(const SweepTable& table) {
  nlohmann::json cols = nlohmann::json::object();
  for (const auto& [name, col] : table.columns) cols[name] = col;
  nlohmann::json fixed = nlohmann::json::object();
  for (const auto& [k, v] : table.fixed_params) fixed[k] = v;
  return nlohmann::json{{"version", version},
                        {"axis_name", table.axis_name},
                        {"axis", table.axis},
                        {"columns", cols},
                        {"fixed_params", fixed}};
}

// Q-parameter of the filtered field versus peak coupling g0: m lower-level
// detections (upper-level injection not scanned) on a coherent state.
// Columns: Q, mean, log_success_prob.
inline SweepTable q_sweep(double nbar, int m, const DKParams& tmpl,
                          const std::vector<double>& g0_values) {
  if (m < 0) throw std::domain_error("q_sweep: m must be >= 0");
  PhotonDistribution input = PhotonDistribution::coherent(nbar);
  MeasurementSequence seq(static_cast<std::size_t>(m), Outcome::Minus);

  SweepTable table;
  table.axis_name = "g0";
  table.axis = g0_values;
  std::vector<double> q, mu, logp;
  q.reserve(g0_values.size());
  mu.reserve(g0_values.size());
  logp.reserve(g0_values.size());
  for (double g0 : g0_values) {
    DKParams p(g0, tmpl.A0, tmpl.T);
    FilteredState fs = apply_sequence(input, p, seq, AtomInjectionCase::CaseA);
    q.push_back(q_parameter(fs.dist));
    mu.push_back(mean(fs.dist));
    logp.push_back(fs.log_success_prob);
  }
  table.columns = {{"Q", std::move(q)}, {"mean", std::move(mu)},
                   {"log_success_prob", std::move(logp)}};
  table.fixed_params = {{"model", "dk"},
                        {"nbar", detail::format_g17(nbar)},
                        {"m", std::to_string(m)},
                        {"A0", detail::format_g17(tmpl.A0)},
                        {"T", detail::format_g17(tmpl.T)},
                        {"case", "a"}};
  return table;
}

}  // namespace photonfilter
