#pragma once

// Photon-number distributions of the cavity mode and their statistics.
// A distribution is a normalized probability vector over n = 0..n_max
// together with an upper bound on the probability mass discarded by the
// truncation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "util.hpp"

namespace photonfilter {

class PhotonDistribution {
 public:
  // Normalizes on construction. `tail_mass_bound` is the caller's bound on
  // the mass beyond n_max (0 for exact finite supports).
  explicit PhotonDistribution(std::vector<double> probs, double tail_mass_bound = 0.0)
      : probs_(std::move(probs)), tail_(tail_mass_bound) {
    if (probs_.empty()) throw std::domain_error("PhotonDistribution: empty support");
    detail::StableSum total;
    for (double p : probs_) {
      if (!(std::isfinite(p) && p >= 0.0))
        throw std::domain_error("PhotonDistribution: probabilities must be finite and >= 0");
      total.add(p);
    }
    double z = total.value();
    if (!(z > 0.0)) throw std::domain_error("PhotonDistribution: total mass is zero");
    for (double& p : probs_) p /= z;
    if (!(std::isfinite(tail_) && tail_ >= 0.0))
      throw std::domain_error("PhotonDistribution: bad tail bound");
  }

  // Poisson photon statistics of a coherent state with mean nbar. The
  // recurrence p_n/p_{n-1} = nbar/n is run outward from the modal bin, so
  // arbitrarily large nbar never underflows at n = 0.
  static PhotonDistribution coherent(double nbar, std::optional<int> n_max = {});

  // Bose-Einstein distribution, p_n proportional to (nbar/(1+nbar))^n.
  static PhotonDistribution thermal(double nbar, std::optional<int> n_max = {});

  // Number state |n>.
  static PhotonDistribution fock(int n) {
    if (n < 0) throw std::domain_error("fock: n must be >= 0");
    std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
    p.back() = 1.0;
    return PhotonDistribution(std::move(p), 0.0);
  }

  int n_max() const { return static_cast<int>(probs_.size()) - 1; }
  const std::vector<double>& probs() const { return probs_; }
  double tail_mass_bound() const { return tail_; }

  // p_n, with p = 0 beyond the truncation.
  double p(int n) const {
    if (n < 0 || n > n_max()) return 0.0;
    return probs_[static_cast<std::size_t>(n)];
  }

 private:
  std::vector<double> probs_;
  double tail_;
};

namespace detail {
// Default truncation for near-Poissonian supports: 12 sigma plus headroom.
inline int poisson_like_cutoff(double nbar) {
  return static_cast<int>(std::ceil(nbar + 12.0 * std::sqrt(nbar + 1.0) + 20.0));
}
inline void require_nbar(double nbar, const char* what) {
  if (!(std::isfinite(nbar) && nbar >= 0.0))
    throw std::domain_error(std::string(what) + ": nbar must be finite and >= 0");
}
}  // namespace detail

inline PhotonDistribution PhotonDistribution::coherent(double nbar,
                                                       std::optional<int> n_max) {
  detail::require_nbar(nbar, "coherent");
  int N = n_max.value_or(detail::poisson_like_cutoff(nbar));
  if (N < 0) throw std::domain_error("coherent: n_max must be >= 0");
  std::vector<double> p(static_cast<std::size_t>(N) + 1, 0.0);
  if (nbar == 0.0) {
    p[0] = 1.0;
    return PhotonDistribution(std::move(p), 0.0);
  }
  int mode = std::min<int>(N, static_cast<int>(nbar));
  p[static_cast<std::size_t>(mode)] = 1.0;
  for (int n = mode + 1; n <= N; ++n)
    p[static_cast<std::size_t>(n)] =
        p[static_cast<std::size_t>(n - 1)] * (nbar / static_cast<double>(n));
  for (int n = mode - 1; n >= 0; --n)
    p[static_cast<std::size_t>(n)] =
        p[static_cast<std::size_t>(n + 1)] * (static_cast<double>(n + 1) / nbar);
  // Geometric bound on the discarded Poisson tail: beyond N the term ratio
  // is at most r = nbar/(N+1).
  detail::StableSum z;
  for (double x : p) z.add(x);
  double tail = 0.0;
  double r = nbar / static_cast<double>(N + 1);
  if (r < 1.0) tail = (p.back() / z.value()) * r / (1.0 - r);
  else tail = 1.0;  // cutoff below the bulk; no useful bound
  return PhotonDistribution(std::move(p), tail);
}

inline PhotonDistribution PhotonDistribution::thermal(double nbar,
                                                      std::optional<int> n_max) {
  detail::require_nbar(nbar, "thermal");
  if (nbar == 0.0) return fock(0);
  double r = nbar / (1.0 + nbar);
  int N;
  if (n_max) {
    N = *n_max;
    if (N < 0) throw std::domain_error("thermal: n_max must be >= 0");
  } else {
    // Smallest N with exact geometric tail r^{N+1} < 1e-12.
    N = static_cast<int>(std::ceil(std::log(1e-12) / std::log(r)));
    N = std::max(N, 1);
    if (N > 5'000'000) throw std::domain_error("thermal: nbar too large for truncation");
  }
  std::vector<double> p(static_cast<std::size_t>(N) + 1);
  p[0] = 1.0;
  for (int n = 1; n <= N; ++n)
    p[static_cast<std::size_t>(n)] = p[static_cast<std::size_t>(n - 1)] * r;
  return PhotonDistribution(std::move(p), std::pow(r, static_cast<double>(N + 1)));
}

inline double mean(const PhotonDistribution& dist) {
  detail::StableSum s;
  for (int n = 0; n <= dist.n_max(); ++n) s.add(static_cast<double>(n) * dist.p(n));
  return s.value();
}

inline double variance(const PhotonDistribution& dist) {
  double mu = mean(dist);
  detail::StableSum s;
  for (int n = 0; n <= dist.n_max(); ++n) {
    double d = static_cast<double>(n) - mu;
    s.add(d * d * dist.p(n));
  }
  return std::max(s.value(), 0.0);
}

// Mandel Q = (variance - mean)/mean; 0 for Poissonian light, in [-1, 0)
// for sub-Poissonian light. Undefined on vacuum.
inline double q_parameter(const PhotonDistribution& dist) {
  double mu = mean(dist);
  if (!(mu > 0.0)) throw std::domain_error("q_parameter: undefined for zero mean");
  return (variance(dist) - mu) / mu;
}

struct FwhmEstimate {
  double width;
  double left;   // left half-maximum crossing (real-valued bin coordinate)
  double right;  // right half-maximum crossing
  bool multimodal;  // more than one region rises above half maximum
};

// Full width at half maximum with the half-crossings located by linear
// interpolation between adjacent bins. If the distribution never drops
// below half maximum on one side, the crossing clamps to that end of the
// support. A multimodal distribution is flagged and the crossings bracket
// the global maximum.
inline FwhmEstimate fwhm_numeric(const PhotonDistribution& dist) {
  const auto& p = dist.probs();
  std::size_t imax = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[imax]) imax = i;
  double half = p[imax] / 2.0;
  if (!(half > 0.0)) throw std::domain_error("fwhm_numeric: degenerate distribution");

  double left = 0.0;
  for (std::size_t i = imax; i-- > 0;) {
    if (p[i] < half) {
      left = static_cast<double>(i) + (half - p[i]) / (p[i + 1] - p[i]);
      break;
    }
  }
  double right = static_cast<double>(p.size() - 1);
  for (std::size_t i = imax + 1; i < p.size(); ++i) {
    if (p[i] < half) {
      right = static_cast<double>(i) - (half - p[i]) / (p[i - 1] - p[i]);
      break;
    }
  }

  int regions = 0;
  bool above = false;
  for (double x : p) {
    bool a = x >= half;
    if (a && !above) ++regions;
    above = a;
  }
  return {right - left, left, right, regions > 1};
}

// --- serialization -------------------------------------------------------

inline void write_csv(const PhotonDistribution& dist, std::ostream& os) {
  os << "n,p_n\n";
  for (int n = 0; n <= dist.n_max(); ++n)
    os << n << ',' << detail::format_g17(dist.p(n)) << '\n';
}

inline nlohmann::json to_json(const PhotonDistribution& dist) {
  return nlohmann::json{{"n_max", dist.n_max()},
                        {"probs", dist.probs()},
                        {"tail_mass_bound", dist.tail_mass_bound()}};
}

inline PhotonDistribution distribution_from_json(const nlohmann::json& j) {
  if (!j.contains("probs"))
    throw std::invalid_argument("distribution: missing field 'probs'");
  std::vector<double> p = j.at("probs").get<std::vector<double>>();
  double tail = j.value("tail_mass_bound", 0.0);
  PhotonDistribution d(std::move(p), tail);
  if (j.contains("n_max") && j.at("n_max").get<int>() != d.n_max())
    throw std::invalid_argument("distribution: n_max inconsistent with probs length");
  return d;
}

}  // namespace photonfilter
