#pragma once

// Pulse models for a two-level atom crossing a single cavity mode. Each
// model fixes the time dependence of the detuning Delta_omega(t) and the
// coupling g(t); for the Landau-Zener and Demkov-Kunike sweeps the
// asymptotic level-transfer probabilities are known in closed form, and
// those closed forms double as photon-number filter functions: family n
// couples with strength g(t)*sqrt(n), so the transfer probability depends
// on the photon number.
//
// All quantities are in dimensionless units (one time scale fixed).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace photonfilter {

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// sech^2(x) without overflowing cosh for large |x|.
inline double sech_sq(double x) {
  x = std::abs(x);
  double s = 2.0 * std::exp(-x) / (1.0 + std::exp(-2.0 * x));
  return s * s;
}

// (cosh(a)/cosh(b))^2 for 0 <= a <= b, overflow-free.
inline double cosh_ratio_sq(double a, double b) {
  double r = std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / (1.0 + std::exp(-2.0 * b));
  return r * r;
}

inline void require_positive(double x, const char* what) {
  if (!(std::isfinite(x) && x > 0.0))
    throw std::domain_error(std::string(what) + " must be finite and > 0");
}

}  // namespace detail

// Linear sweep: g(t) = g0, Delta_omega(t) = 2*lambda*t.
struct LZParams {
  double g0;
  double lambda;

  LZParams(double g0_, double lambda_) : g0(g0_), lambda(lambda_) {
    detail::require_positive(g0, "LZParams: g0");
    detail::require_positive(lambda, "LZParams: lambda");
  }

  // Sweep exponent v = pi*g0^2/lambda; family n survives with exp(-v*n).
  double v() const { return std::numbers::pi * g0 * g0 / lambda; }
};

// Hyperbolic sweep: g(t) = g0*sech(t/T), Delta_omega(t) = 2*A0*tanh(t/T).
// A0 = 0 is allowed (pure sech pulse at fixed resonance).
struct DKParams {
  double g0;
  double A0;
  double T;

  DKParams(double g0_, double A0_, double T_) : g0(g0_), A0(A0_), T(T_) {
    detail::require_positive(g0, "DKParams: g0");
    detail::require_positive(T, "DKParams: T");
    if (!(std::isfinite(A0) && A0 >= 0.0))
      throw std::domain_error("DKParams: A0 must be finite and >= 0");
  }

  double adiabaticity() const { return A0 * T; }
};

struct PulseSample {
  double delta_omega;
  double g;
};

// Sampled (t, Delta_omega, g) table with linear interpolation between
// samples. No closed-form filter; integrate it with the propagator.
class TabulatedPulse {
 public:
  TabulatedPulse(std::vector<double> t, std::vector<double> delta_omega,
                 std::vector<double> g)
      : t_(std::move(t)), dw_(std::move(delta_omega)), g_(std::move(g)) {
    if (t_.size() < 2 || t_.size() != dw_.size() || t_.size() != g_.size())
      throw std::domain_error("TabulatedPulse: need >= 2 samples of equal length");
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!std::isfinite(t_[i]) || !std::isfinite(dw_[i]) || !std::isfinite(g_[i]))
        throw std::domain_error("TabulatedPulse: samples must be finite");
      if (g_[i] < 0.0)
        throw std::domain_error("TabulatedPulse: g(t) must be >= 0");
      if (i > 0 && !(t_[i] > t_[i - 1]))
        throw std::domain_error("TabulatedPulse: times must be strictly increasing");
    }
  }

  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }

  PulseSample sample(double t) const {
    if (t < t_min() || t > t_max())
      throw std::out_of_range("TabulatedPulse: t outside sampled window");
    auto it = std::lower_bound(t_.begin(), t_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - t_.begin());
    if (hi == 0) return {dw_[0], g_[0]};
    std::size_t lo = hi - 1;
    if (hi == t_.size()) return {dw_.back(), g_.back()};
    double f = (t - t_[lo]) / (t_[hi] - t_[lo]);
    return {dw_[lo] + f * (dw_[hi] - dw_[lo]), g_[lo] + f * (g_[hi] - g_[lo])};
  }

  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& detunings() const { return dw_; }
  const std::vector<double>& couplings() const { return g_; }

 private:
  std::vector<double> t_, dw_, g_;
};

using PulseModel = std::variant<LZParams, DKParams, TabulatedPulse>;

inline PulseSample sample_pulse(const PulseModel& model, double t) {
  return std::visit(
      detail::overloaded{
          [&](const LZParams& p) {
            return PulseSample{2.0 * p.lambda * t, p.g0};
          },
          [&](const DKParams& p) {
            double u = t / p.T;
            return PulseSample{2.0 * p.A0 * std::tanh(u), p.g0 / std::cosh(u)};
          },
          [&](const TabulatedPulse& p) { return p.sample(t); }},
      model);
}

// Asymptotic scattering data of one photon family, in the parameterization
// with a real diagonal: diag sqrt(1-w), off-diagonal e^{-i phi} sqrt(w).
// `transfer_prob` is the probability that the atom ends in the other level.
struct TransferMatrix {
  double transfer_prob;
  double phase;  // in [0, 2*pi)
};

namespace detail {
inline void require_family(int n) {
  if (n < 1)
    throw std::domain_error(
        "filter: family index must be >= 1 (family 0 has no coupled pair)");
}
}  // namespace detail

// |a_-(n)|^2 for an atom entering in its lower level: exp(-v*n).
inline double lz_lower_filter(int n, const LZParams& p) {
  detail::require_family(n);
  return std::exp(-p.v() * static_cast<double>(n));
}

// |a_-(n)|^2 for the hyperbolic sweep. Two branches of one analytic
// function of g0^2*n - A0^2: trigonometric above, hyperbolic below; they
// coincide at the branch point.
inline double dk_lower_filter(int n, const DKParams& p) {
  detail::require_family(n);
  double det = p.g0 * p.g0 * static_cast<double>(n) - p.A0 * p.A0;
  double b = std::numbers::pi * p.T * p.A0;
  if (det >= 0.0) {
    double c = std::cos(std::numbers::pi * p.T * std::sqrt(det));
    return c * c * detail::sech_sq(b);
  }
  return detail::cosh_ratio_sq(std::numbers::pi * p.T * std::sqrt(-det), b);
}

// Non-adiabatic limit of dk_lower_filter, cos^2(pi*T*g0*sqrt(n)); kept as
// an explicit A/B comparison path, not used by default.
inline double dk_lower_filter_nonadiabatic(int n, const DKParams& p) {
  detail::require_family(n);
  double c = std::cos(std::numbers::pi * p.T * p.g0 * std::sqrt(static_cast<double>(n)));
  return c * c;
}

struct FilterPair {
  double lower;  // |a_-(n)|^2
  double upper;  // |a_+(n)|^2 = 1 - lower
};

// Closed-form filter pair for an atom injected in its lower level.
// n = 0 is the uncoupled family: (1, 0).
inline FilterPair case_a_filter(int n, const PulseModel& model) {
  if (n < 0) throw std::domain_error("case_a_filter: n must be >= 0");
  if (n == 0) return {1.0, 0.0};
  return std::visit(
      detail::overloaded{
          [&](const LZParams& p) {
            double w = lz_lower_filter(n, p);
            return FilterPair{w, 1.0 - w};
          },
          [&](const DKParams& p) {
            double w = dk_lower_filter(n, p);
            return FilterPair{w, 1.0 - w};
          },
          [](const TabulatedPulse&) -> FilterPair {
            throw std::domain_error(
                "case_a_filter: tabulated pulse has no closed form; use the "
                "propagator");
          }},
      model);
}

// --- serialization -------------------------------------------------------
// {"type":"lz","g0":..,"lambda":..}
// {"type":"dk","g0":..,"A0":..,"T":..}
// {"type":"tabulated","samples":[[t,delta_omega,g],...]}

inline nlohmann::json to_json(const PulseModel& model) {
  return std::visit(
      detail::overloaded{
          [](const LZParams& p) {
            return nlohmann::json{{"type", "lz"}, {"g0", p.g0}, {"lambda", p.lambda}};
          },
          [](const DKParams& p) {
            return nlohmann::json{
                {"type", "dk"}, {"g0", p.g0}, {"A0", p.A0}, {"T", p.T}};
          },
          [](const TabulatedPulse& p) {
            nlohmann::json samples = nlohmann::json::array();
            for (std::size_t i = 0; i < p.times().size(); ++i)
              samples.push_back({p.times()[i], p.detunings()[i], p.couplings()[i]});
            return nlohmann::json{{"type", "tabulated"}, {"samples", samples}};
          }},
      model);
}

inline PulseModel pulse_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key))
      throw std::invalid_argument(std::string("pulse model: missing field '") +
                                  key + "'");
    return j.at(key);
  };
  std::string type = need("type").get<std::string>();
  for (auto& c : type) c = static_cast<char>(std::tolower(c));
  if (type == "lz") return LZParams(need("g0").get<double>(), need("lambda").get<double>());
  if (type == "dk")
    return DKParams(need("g0").get<double>(), need("A0").get<double>(),
                    need("T").get<double>());
  if (type == "tabulated") {
    std::vector<double> t, dw, g;
    for (const auto& row : need("samples")) {
      if (!row.is_array() || row.size() != 3)
        throw std::invalid_argument("pulse model: samples must be [t,delta_omega,g] triples");
      t.push_back(row[0].get<double>());
      dw.push_back(row[1].get<double>());
      g.push_back(row[2].get<double>());
    }
    return TabulatedPulse(std::move(t), std::move(dw), std::move(g));
  }
  throw std::invalid_argument("pulse model: unknown type '" + type + "'");
}

}  // namespace photonfilter
