#pragma once

// Measurement back-action of detected atoms on the cavity field. Each atom
// crosses the cavity once and is detected in its lower (Minus) or upper
// (Plus) level; the photon distribution is reweighted by the corresponding
// filter function and, when the atom exchanged a quantum with the field,
// shifted by one photon. Projective detection between atoms means only
// probabilities enter - no interference terms are tracked.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "field.hpp"
#include "pulses.hpp"
#include "util.hpp"

namespace photonfilter {

enum class Outcome { Minus, Plus };

// Which level the atom is injected in: CaseA lower, CaseB upper.
enum class AtomInjectionCase { CaseA, CaseB };

// A recorded outcome's probability underflowed: the sequence cannot occur
// on this state (e.g. Plus on vacuum for a lower-level atom).
class impossible_outcome_error : public std::runtime_error {
 public:
  explicit impossible_outcome_error(const std::string& what)
      : std::runtime_error(what) {}
};

using MeasurementSequence = std::vector<Outcome>;

// "--+-" (ASCII or U+2212 minus) or "mN" for N Minus outcomes; whitespace
// ignored; empty string is the empty sequence.
inline MeasurementSequence parse_sequence(std::string_view s) {
  MeasurementSequence seq;
  if (!s.empty() && (s[0] == 'm' || s[0] == 'M')) {
    std::string_view digits = s.substr(1);
    if (digits.empty())
      throw std::invalid_argument("sequence: 'm' must be followed by a count");
    long count = 0;
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw std::invalid_argument("sequence: bad count in '" + std::string(s) + "'");
      count = count * 10 + (c - '0');
      if (count > 1'000'000) throw std::invalid_argument("sequence: count too large");
    }
    seq.assign(static_cast<std::size_t>(count), Outcome::Minus);
    return seq;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) continue;
    if (c == '+') {
      seq.push_back(Outcome::Plus);
      continue;
    }
    if (c == '-') {
      seq.push_back(Outcome::Minus);
      continue;
    }
    // U+2212 MINUS SIGN (UTF-8: e2 88 92)
    if (c == 0xE2 && i + 2 < s.size() &&
        static_cast<unsigned char>(s[i + 1]) == 0x88 &&
        static_cast<unsigned char>(s[i + 2]) == 0x92) {
      seq.push_back(Outcome::Minus);
      i += 2;
      continue;
    }
    throw std::invalid_argument("sequence: unexpected character in '" +
                                std::string(s) + "'");
  }
  return seq;
}

inline std::string sequence_to_string(const MeasurementSequence& seq) {
  std::string s;
  s.reserve(seq.size());
  for (Outcome o : seq) s.push_back(o == Outcome::Minus ? '-' : '+');
  return s;
}

// Per-family survival probabilities |a_-(k)|^2 for a lower-level atom,
// k = 0..max_family, precomputed once and shared across sequence steps.
// survival(0) = 1: the vacuum family has no partner state.
class FilterTable {
 public:
  explicit FilterTable(std::vector<double> survival) : survival_(std::move(survival)) {
    if (survival_.empty() || survival_[0] != 1.0)
      throw std::domain_error("FilterTable: survival[0] must exist and equal 1");
    for (double w : survival_)
      if (!(std::isfinite(w) && w >= 0.0 && w <= 1.0))
        throw std::domain_error("FilterTable: survival values must lie in [0,1]");
  }

  static FilterTable analytic(const PulseModel& model, int max_family) {
    if (max_family < 0) throw std::domain_error("FilterTable: max_family must be >= 0");
    std::vector<double> w(static_cast<std::size_t>(max_family) + 1);
    for (int k = 0; k <= max_family; ++k)
      w[static_cast<std::size_t>(k)] = case_a_filter(k, model).lower;
    return FilterTable(std::move(w));
  }

  double survival(int k) const {
    if (k < 0 || k > max_family())
      throw std::out_of_range("FilterTable: family index out of range");
    return survival_[static_cast<std::size_t>(k)];
  }
  double transfer(int k) const { return 1.0 - survival(k); }
  int max_family() const { return static_cast<int>(survival_.size()) - 1; }

 private:
  std::vector<double> survival_;
};

struct StepResult {
  PhotonDistribution dist;
  double step_prob;  // probability of this outcome on the input state
};

// One projection step. Lower-level atom (CaseA): Minus reweights by
// survival(n); Plus means a photon was absorbed, so the filtered
// distribution shifts down by one (weight transfer(n+1) on p_{n+1}).
// Upper-level atom (CaseB) interchanges the filters, and a Minus outcome
// emits a photon: shift up by one (weight transfer(n) on p_{n-1}).
inline StepResult apply_outcome(const PhotonDistribution& dist, const FilterTable& table,
                                Outcome outcome, AtomInjectionCase injection) {
  const int N = dist.n_max();
  std::vector<double> q;
  if (injection == AtomInjectionCase::CaseA) {
    if (outcome == Outcome::Minus) {
      q.resize(static_cast<std::size_t>(N) + 1);
      for (int n = 0; n <= N; ++n)
        q[static_cast<std::size_t>(n)] = table.survival(n) * dist.p(n);
    } else {
      q.resize(static_cast<std::size_t>(std::max(N, 1)), 0.0);
      for (int n = 0; n <= N - 1; ++n)
        q[static_cast<std::size_t>(n)] = table.transfer(n + 1) * dist.p(n + 1);
    }
  } else {
    if (outcome == Outcome::Plus) {
      q.resize(static_cast<std::size_t>(N) + 1);
      for (int n = 0; n <= N; ++n)
        q[static_cast<std::size_t>(n)] = table.survival(n + 1) * dist.p(n);
    } else {
      q.resize(static_cast<std::size_t>(N) + 2, 0.0);
      for (int n = 1; n <= N + 1; ++n)
        q[static_cast<std::size_t>(n)] = table.transfer(n) * dist.p(n - 1);
    }
  }
  detail::StableSum mass;
  for (double x : q) mass.add(x);
  double step_prob = mass.value();
  if (!(step_prob >= 1e-300))
    throw impossible_outcome_error(
        "apply_outcome: outcome probability underflowed (< 1e-300)");
  double tail = std::min(1.0, dist.tail_mass_bound() / step_prob);
  return {PhotonDistribution(std::move(q), tail), step_prob};
}

namespace detail {
inline int table_size_for(const PhotonDistribution& dist, const MeasurementSequence& seq,
                          AtomInjectionCase injection) {
  int max_family = dist.n_max() + 1;
  if (injection == AtomInjectionCase::CaseB) {
    int minus = 0;
    for (Outcome o : seq)
      if (o == Outcome::Minus) ++minus;
    max_family += minus;
  }
  return max_family;
}
}  // namespace detail

inline StepResult apply_outcome(const PhotonDistribution& dist, const PulseModel& model,
                                Outcome outcome, AtomInjectionCase injection) {
  auto table =
      FilterTable::analytic(model, detail::table_size_for(dist, {outcome}, injection));
  return apply_outcome(dist, table, outcome, injection);
}

struct FilteredState {
  PhotonDistribution dist;
  double log_success_prob;  // ln of the probability of the recorded sequence
  int steps;
};

// Left-fold of apply_outcome; per-step probabilities accumulate in log
// space (long sequences reach ~1e-40 and below).
inline FilteredState apply_sequence(const PhotonDistribution& dist, const FilterTable& table,
                                    const MeasurementSequence& seq,
                                    AtomInjectionCase injection) {
  PhotonDistribution state = dist;
  detail::StableSum log_prob;
  for (Outcome o : seq) {
    StepResult r = apply_outcome(state, table, o, injection);
    state = std::move(r.dist);
    log_prob.add(std::log(r.step_prob));
  }
  return {std::move(state), log_prob.value(), static_cast<int>(seq.size())};
}

inline FilteredState apply_sequence(const PhotonDistribution& dist, const PulseModel& model,
                                    const MeasurementSequence& seq,
                                    AtomInjectionCase injection) {
  auto table = FilterTable::analytic(model, detail::table_size_for(dist, seq, injection));
  return apply_sequence(dist, table, seq, injection);
}

// Closed form for m lower-level detections of linear-sweep atoms on a
// coherent state: again coherent, with mean reduced to nbar*e^{-v*m}.
// Used as an oracle against the generic pipeline.
inline PhotonDistribution lz_minus_closed_form(double nbar, double v, int m,
                                               std::optional<int> n_max = {}) {
  if (!(std::isfinite(nbar) && nbar >= 0.0))
    throw std::domain_error("lz_minus_closed_form: nbar must be >= 0");
  if (!(std::isfinite(v) && v > 0.0))
    throw std::domain_error("lz_minus_closed_form: v must be > 0");
  if (m < 0) throw std::domain_error("lz_minus_closed_form: m must be >= 0");
  return PhotonDistribution::coherent(nbar * std::exp(-v * static_cast<double>(m)), n_max);
}

// Mean photon number after detecting one linear-sweep atom in its upper
// level, starting from a coherent state:
//   <n>_+ = nbar * (1 - e^{X-v}) / (1 - e^X) - 1,  X = nbar*(e^{-v} - 1).
inline double lz_upper_mean(double nbar, double v) {
  if (!(std::isfinite(nbar) && nbar > 0.0))
    throw std::domain_error("lz_upper_mean: nbar must be > 0");
  if (!(std::isfinite(v) && v > 0.0))
    throw std::domain_error("lz_upper_mean: v must be > 0");
  double x = nbar * std::expm1(-v);
  return nbar * std::expm1(x - v) / std::expm1(x) - 1.0;
}

// --- serialization -------------------------------------------------------
// CSV: one commented JSON header line, then the distribution table.

inline nlohmann::json header_json(const FilteredState& fs) {
  return nlohmann::json{{"steps", fs.steps}, {"log_success_prob", fs.log_success_prob}};
}

inline void write_csv(const FilteredState& fs, std::ostream& os) {
  os << "# " << header_json(fs).dump() << '\n';
  write_csv(fs.dist, os);
}

inline nlohmann::json to_json(const FilteredState& fs) {
  nlohmann::json j = header_json(fs);
  j["dist"] = to_json(fs.dist);
  return j;
}

}  // namespace photonfilter
