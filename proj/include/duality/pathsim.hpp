#pragma once

// Graphical representations of spin systems on a finite site set: Poisson
// arrows carrying two-site mechanisms, read forward in time for the process
// and backward (reversed time, reversed arrows) for its dual.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "duality/rational.hpp"
#include "duality/report.hpp"

namespace duality::pathsim {

/// Pair state (a, b) encoded as 2a + b.
using Pair = std::uint8_t;

constexpr Pair encode(int a, int b) { return static_cast<Pair>(2 * a + b); }
constexpr int first(Pair p) { return p >> 1; }
constexpr int second(Pair p) { return p & 1; }
/// (a, b) -> (b, a)
constexpr Pair swap(Pair p) { return encode(second(p), first(p)); }

/// Map {0,1}^2 -> {0,1}^2 applied to (x_i, x_j) of an arrow i -> j.
struct Mechanism {
  std::string name;
  std::array<Pair, 4> table{};

  Pair operator()(Pair in) const { return table[in]; }
  bool operator==(const Mechanism& o) const { return table == o.table; }
};

Mechanism identity_mechanism();

/// R, C, A, D, BC, BA in that order.
const std::vector<Mechanism>& standard_mechanisms();

/// Looks up "I" or one of the standard names; throws ValidationError otherwise.
const Mechanism& mechanism_by_name(std::string_view name);

/// q in [-1, 1) as a reduced fraction.
class QParameter {
 public:
  static QParameter from(const Rational& q);
  static QParameter parse(const std::string& text);

  const Rational& value() const { return q_; }
  double as_double() const { return static_cast<double>(q_); }
  /// q^k with 0^0 = 1.
  Rational pow(std::size_t k) const;
  std::string str() const { return to_string(q_); }

 private:
  explicit QParameter(Rational q) : q_(std::move(q)) {}
  Rational q_;
};

struct MechanismDualityReport {
  bool dual = true;
  std::optional<std::pair<Pair, Pair>> witness;  // (x, y)
};

/// Exhaustive check of q^{|x ^ (g(y^+))^+|} = q^{|f(x) ^ y|} over the 16 pairs, exactly.
MechanismDualityReport is_q_dual_mechanism(const Mechanism& f, const Mechanism& g, const QParameter& q);

struct MechanismMonotoneReport {
  bool monotone = true;
  std::optional<std::pair<Pair, Pair>> witness;  // x <= y with f(x) not <= f(y)
};

MechanismMonotoneReport mechanism_monotone(const Mechanism& f);

class SpinConfiguration {
 public:
  SpinConfiguration() = default;
  explicit SpinConfiguration(std::size_t n) : bits_(n, 0) {}
  static SpinConfiguration from_mask(std::uint64_t mask, std::size_t n);
  static SpinConfiguration from_bits(std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  int operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, int v) { bits_[i] = static_cast<std::uint8_t>(v != 0); }
  std::size_t count() const;
  /// |x ^ y|
  std::size_t meet_count(const SpinConfiguration& o) const;
  SpinConfiguration complement() const;
  /// Componentwise x <= y.
  bool leq(const SpinConfiguration& o) const;
  std::uint64_t mask() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  bool operator==(const SpinConfiguration& o) const { return bits_ == o.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
};

struct ArrowEvent {
  double time = 0.0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  std::uint32_t label = 0;

  bool operator==(const ArrowEvent& o) const {
    return time == o.time && from == o.from && to == o.to && label == o.label;
  }
};

/// Rates lambda^k_{ij} per mechanism label k and ordered pair (i, j).
class RateTable {
 public:
  RateTable(std::size_t sites, std::size_t labels);
  /// Every ordered pair i != j gets rate[k] for label k.
  static RateTable complete_graph(std::size_t sites, const std::vector<double>& rate_per_label);

  double operator()(std::size_t k, std::size_t i, std::size_t j) const { return r_[(k * n_ + i) * n_ + j]; }
  void set(std::size_t k, std::size_t i, std::size_t j, double v);
  std::size_t sites() const { return n_; }
  std::size_t labels() const { return k_; }
  bool symmetric() const;
  double total() const;

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> r_;
};

class GraphicalRepresentation {
 public:
  GraphicalRepresentation(RateTable rates, double horizon, std::uint64_t seed, std::vector<ArrowEvent> events);

  std::size_t sites() const { return rates_.sites(); }
  double horizon() const { return horizon_; }
  std::uint64_t seed() const { return seed_; }
  const RateTable& rates() const { return rates_; }
  bool is_reversed() const { return reversed_; }
  /// Events in reading order: forward order, or for a reversed representation
  /// times T - t with endpoints swapped, latest first.
  std::vector<ArrowEvent> events() const;
  std::size_t size() const { return canonical_.size(); }
  /// Time and direction reversal; applying it twice restores the original.
  GraphicalRepresentation reversed() const;

  bool operator==(const GraphicalRepresentation& o) const;

 private:
  RateTable rates_;
  double horizon_;
  std::uint64_t seed_;
  std::vector<ArrowEvent> canonical_;
  bool reversed_ = false;
};

/// Independent Poisson streams per (i, j, k) with seed mix(seed, i, j, k); merged
/// and ordered by (time, i, j, k).
GraphicalRepresentation sample_graphical_representation(const RateTable& rates, double horizon, std::uint64_t seed);

struct Delta {
  double time = 0.0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  std::uint32_t label = 0;
  Pair before = 0;
  Pair after = 0;
};

struct Trajectory {
  SpinConfiguration initial;
  SpinConfiguration final_state;
  std::vector<Delta> deltas;  // one per event, in reading order
  /// State after the first k events.
  SpinConfiguration state_after(std::size_t k) const;
};

/// (x_i, x_j) <- f^k(x_i, x_j) for each arrow in time order.
Trajectory evolve_forward(const SpinConfiguration& x0, const GraphicalRepresentation& g,
                          const std::vector<Mechanism>& mechanisms);

/// Starts at T and reads arrows latest first with (y_i, y_j) <- g^k((y_i, y_j)^+)^+.
/// Delta times are backward times T - t.
Trajectory evolve_backward(const SpinConfiguration& y0, const GraphicalRepresentation& g,
                           const std::vector<Mechanism>& dual_mechanisms);

struct PathwiseReport {
  bool holds = true;
  std::size_t intervals_checked = 0;
  std::optional<std::size_t> first_failure;  // interval index
};

/// Exact comparison of q^{|X_s ^ Y_{T-s}|} on every inter-event interval.
/// Refuses (ValidationError) non-dual mechanism pairs and asymmetric rates.
PathwiseReport verify_strong_pathwise(const SpinConfiguration& x0, const SpinConfiguration& y0, const QParameter& q,
                                      const GraphicalRepresentation& g, const std::vector<Mechanism>& forward,
                                      const std::vector<Mechanism>& backward);

struct AllPairsReport {
  bool holds = true;
  std::size_t pairs_checked = 0;
  std::size_t intervals_checked = 0;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> failing_pair;
};

/// verify_strong_pathwise over every (x0, y0) in {0,1}^N x {0,1}^N (N <= 10).
AllPairsReport verify_all_pairs(const QParameter& q, const GraphicalRepresentation& g,
                                const std::vector<Mechanism>& forward, const std::vector<Mechanism>& backward);

struct WalkReport {
  bool holds = true;
  int indicator = 1;  // common value of 1{X_n <= Y_{N-n}}
  std::vector<long> forward;   // X_0..X_N
  std::vector<long> backward;  // Y_0..Y_N
};

/// Absorbed walk forward, reflected walk backward, shared fair +-1 steps.
WalkReport rw_siegmund_pathwise(long x, long y, std::size_t steps, std::uint64_t seed);

/// E[q^Z], Z ~ Hyp(N, a, b). Exact for N <= 30, log-gamma weights beyond.
double hypergeometric_duality_value(std::size_t n, std::size_t a, std::size_t b, double q);
Rational hypergeometric_duality_exact(std::size_t n, std::size_t a, std::size_t b, const Rational& q);

struct MechanismPair {
  Mechanism forward;
  Mechanism backward;
};

struct ExchangeableConfig {
  std::size_t sites = 20;
  std::size_t a = 5;
  std::size_t b = 3;
  QParameter q = QParameter::from(Rational(0));
  MechanismPair mechanisms;
  double rate = 0.05;  // per ordered pair
  double t = 1.0;
  std::size_t grid_points = 5;
  std::size_t replicas = 100000;
  std::uint64_t seed = 1;
};

/// Estimates E[H~(|A_s|, |B_{t-s}|)] on an even s-grid of [0, t]; passes iff all
/// pairwise differences lie within 3 pooled SE.
SimulationReport mc_exchangeable_duality(const ExchangeableConfig& cfg);

/// Per-arrow choice between two mechanism pairs from a dedicated type stream.
class RandomizedMechanism {
 public:
  RandomizedMechanism(MechanismPair first, MechanismPair second, double p, std::uint64_t type_seed);
  /// 0 for the first pair (probability p), 1 for the second. Depends only on
  /// the forward-time index of the arrow.
  int type_of(std::size_t arrow_index) const;
  const MechanismPair& pair(int type) const { return type == 0 ? first_ : second_; }
  double p() const { return p_; }

 private:
  MechanismPair first_;
  MechanismPair second_;
  double p_;
  std::uint64_t type_seed_;
};

struct ConditionalConfig {
  std::size_t sites = 10;
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  QParameter q = QParameter::from(Rational(-1));
  double rate = 0.1;
  double t = 1.0;
  std::size_t replicas = 100000;
  std::uint64_t seed = 1;
};

/// With the type stream held fixed, estimates E[H(X_t^x, y)] and E[H(x, Y_t^y)]
/// from independent arrow families. Passes within 3 combined SE.
SimulationReport conditional_duality_test(const RandomizedMechanism& mech, const ConditionalConfig& cfg);

/// Exact check for one arrow family with types assigned by forward index.
PathwiseReport verify_randomized_pathwise(const SpinConfiguration& x0, const SpinConfiguration& y0,
                                          const QParameter& q, const GraphicalRepresentation& g,
                                          const RandomizedMechanism& mech);

}  // namespace duality::pathsim
