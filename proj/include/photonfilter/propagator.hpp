#pragma once

// Direct numerical integration of the per-family two-level equations of
// motion,
//   i d/dt (a+, a-) = [[dw/2, g*sqrt(n)], [g*sqrt(n), -dw/2]] (a+, a-),
// for any pulse model. Serves as the independent check of the closed-form
// filter functions and as the only evaluation path for tabulated pulses.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "pulses.hpp"

namespace photonfilter {

struct FamilyAmplitudes {
  std::complex<double> a_plus;
  std::complex<double> a_minus;

  double norm_sq() const { return std::norm(a_plus) + std::norm(a_minus); }
};

struct IntegrationConfig {
  double t_start;
  double t_end;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 = uncapped

  void validate() const {
    if (!(std::isfinite(t_start) && std::isfinite(t_end) && t_start < t_end))
      throw std::domain_error("IntegrationConfig: need t_start < t_end");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::domain_error("IntegrationConfig: tolerances must be > 0");
    if (!(max_step >= 0.0))
      throw std::domain_error("IntegrationConfig: max_step must be >= 0");
  }
};

class integration_error : public std::runtime_error {
 public:
  integration_error(const std::string& what, double t_fail_)
      : std::runtime_error(what + " (t = " + std::to_string(t_fail_) + ")"),
        t_fail(t_fail_) {}
  double t_fail;
};

namespace detail {

// (Re a+, Im a+, Re a-, Im a-)
using OdeState = std::array<double, 4>;

inline OdeState to_state(const FamilyAmplitudes& a) {
  return {a.a_plus.real(), a.a_plus.imag(), a.a_minus.real(), a.a_minus.imag()};
}

inline FamilyAmplitudes from_state(const OdeState& x) {
  return {{x[0], x[1]}, {x[2], x[3]}};
}

struct FamilyRhs {
  const PulseModel* model;
  double root_n;
  double t_lo, t_hi;  // clamp integrator-internal overshoot

  void operator()(const OdeState& x, OdeState& dxdt, double t) const {
    if (t < t_lo) t = t_lo;
    if (t > t_hi) t = t_hi;
    PulseSample s = sample_pulse(*model, t);
    double h = 0.5 * s.delta_omega;
    double k = s.g * root_n;
    dxdt[0] = h * x[1] + k * x[3];
    dxdt[1] = -h * x[0] - k * x[2];
    dxdt[2] = k * x[1] - h * x[3];
    dxdt[3] = -k * x[0] + h * x[2];
  }
};

// Adaptive Cash-Karp 5(4) over [t0, t1], calling obs(t, x) after each
// accepted step. Throws integration_error on step-size underflow.
template <class Obs>
OdeState integrate_window(const FamilyRhs& rhs, OdeState x, double t0, double t1,
                          const IntegrationConfig& cfg, Obs&& obs) {
  namespace ode = boost::numeric::odeint;
  auto stepper =
      ode::make_controlled(cfg.abs_tol, cfg.rel_tol, ode::runge_kutta_cash_karp54<OdeState>());
  double span = t1 - t0;
  if (!(span > 0.0)) return x;
  double t = t0;
  double dt = span / 1024.0;
  if (cfg.max_step > 0.0 && dt > cfg.max_step) dt = cfg.max_step;
  while (t < t1) {
    if (dt > t1 - t) dt = t1 - t;
    int rejected = 0;
    while (stepper.try_step(rhs, x, t, dt) == ode::controlled_step_result::fail) {
      if (++rejected > 1000 || !(dt > 1e-15 * (std::abs(t) + 1.0)))
        throw integration_error("propagate_family: step size underflow", t);
    }
    if (cfg.max_step > 0.0 && dt > cfg.max_step) dt = cfg.max_step;
    obs(t, x);
  }
  return x;
}

inline FamilyRhs make_rhs(int n, const PulseModel& model, const IntegrationConfig& cfg) {
  if (n < 1) throw std::domain_error("propagate_family: family index must be >= 1");
  cfg.validate();
  return FamilyRhs{&model, std::sqrt(static_cast<double>(n)), cfg.t_start, cfg.t_end};
}

}  // namespace detail

template <class Obs>
FamilyAmplitudes propagate_family(int n, const PulseModel& model,
                                  const FamilyAmplitudes& init, const IntegrationConfig& cfg,
                                  Obs&& observer) {
  detail::FamilyRhs rhs = detail::make_rhs(n, model, cfg);
  if (std::abs(init.norm_sq() - 1.0) > 1e-12)
    throw std::domain_error("propagate_family: initial state must be normalized");
  auto x = detail::integrate_window(
      rhs, detail::to_state(init), cfg.t_start, cfg.t_end, cfg,
      [&](double t, const detail::OdeState& s) { observer(t, detail::from_state(s)); });
  return detail::from_state(x);
}

inline FamilyAmplitudes propagate_family(int n, const PulseModel& model,
                                         const FamilyAmplitudes& init,
                                         const IntegrationConfig& cfg) {
  return propagate_family(n, model, init, cfg, [](double, const FamilyAmplitudes&) {});
}

// Scattering data extracted from the two basis runs. `w` is the transfer
// probability (probability of ending in the other level); the lower-level
// survival filter is therefore 1 - w. The phase is arg(U11) - arg(U12) in
// [0, 2*pi), matching the parameterization with a real diagonal; it is 0
// by convention when either matrix element vanishes.
inline TransferMatrix numeric_transfer_matrix(int n, const PulseModel& model,
                                              const IntegrationConfig& cfg) {
  FamilyAmplitudes col1 = propagate_family(n, model, {{1.0, 0.0}, {0.0, 0.0}}, cfg);
  FamilyAmplitudes col2 = propagate_family(n, model, {{0.0, 0.0}, {1.0, 0.0}}, cfg);
  std::complex<double> u11 = col1.a_plus;
  std::complex<double> u12 = col2.a_plus;
  double w = std::norm(u12);
  if (w > 1.0) w = 1.0;
  double phi = 0.0;
  if (std::abs(u11) > 1e-12 && std::abs(u12) > 1e-12) {
    phi = std::arg(u11) - std::arg(u12);
    phi = std::fmod(phi, 2.0 * std::numbers::pi);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  }
  return {w, phi};
}

// |a_-|^2 after a lower-level injection. With `average_tail`, the value is
// the trapezoid average of |a_-(t)|^2 over the last detuning period
// 2*pi/|dw(t_end)| of the window, damping the finite-window oscillations
// of sweeps that never switch off their coupling (the linear sweep).
inline double numeric_lower_filter(int n, const PulseModel& model,
                                   const IntegrationConfig& cfg, bool average_tail = false) {
  detail::FamilyRhs rhs = detail::make_rhs(n, model, cfg);
  detail::OdeState x{0.0, 0.0, 1.0, 0.0};
  auto nop = [](double, const detail::OdeState&) {};
  auto lower_sq = [](const detail::OdeState& s) { return s[2] * s[2] + s[3] * s[3]; };

  double period = 0.0;
  if (average_tail) {
    double dw_end = std::abs(sample_pulse(model, cfg.t_end).delta_omega);
    if (dw_end > 0.0) period = std::min(2.0 * std::numbers::pi / dw_end, cfg.t_end - cfg.t_start);
  }
  if (period <= 0.0) {
    x = detail::integrate_window(rhs, x, cfg.t_start, cfg.t_end, cfg, nop);
    return lower_sq(x);
  }

  double t_tail = cfg.t_end - period;
  x = detail::integrate_window(rhs, x, cfg.t_start, t_tail, cfg, nop);
  constexpr int K = 64;
  double acc = 0.5 * lower_sq(x);
  double prev = t_tail;
  for (int k = 1; k <= K; ++k) {
    double tk = cfg.t_end - period * static_cast<double>(K - k) / K;
    x = detail::integrate_window(rhs, x, prev, tk, cfg, nop);
    prev = tk;
    acc += (k == K ? 0.5 : 1.0) * lower_sq(x);
  }
  return acc / static_cast<double>(K);
}

// Survival filter over a family range (inclusive).
inline std::vector<double> numeric_survival_probs(int n_from, int n_to,
                                                  const PulseModel& model,
                                                  const IntegrationConfig& cfg,
                                                  bool average_tail = false) {
  if (n_from < 1 || n_to < n_from)
    throw std::domain_error("numeric_survival_probs: need 1 <= n_from <= n_to");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_to - n_from + 1));
  for (int n = n_from; n <= n_to; ++n)
    out.push_back(numeric_lower_filter(n, model, cfg, average_tail));
  return out;
}

// Finite window standing in for the infinite interaction period:
// hyperbolic pulses use +-mult*T (tails < 1e-17 of peak at mult = 20);
// the linear sweep uses +-mult/sqrt(lambda), i.e. lambda*t^2 = mult^2 at
// the endpoints; tabulated pulses always use their full sampled range.
inline IntegrationConfig default_window(const PulseModel& model, double mult = 20.0) {
  if (!(std::isfinite(mult) && mult > 0.0))
    throw std::domain_error("default_window: multiplier must be > 0");
  IntegrationConfig cfg{};
  std::visit(detail::overloaded{
                 [&](const LZParams& p) {
                   double tau = mult / std::sqrt(p.lambda);
                   cfg.t_start = -tau;
                   cfg.t_end = tau;
                 },
                 [&](const DKParams& p) {
                   cfg.t_start = -mult * p.T;
                   cfg.t_end = mult * p.T;
                 },
                 [&](const TabulatedPulse& p) {
                   cfg.t_start = p.t_min();
                   cfg.t_end = p.t_max();
                 }},
             model);
  return cfg;
}

}  // namespace photonfilter
