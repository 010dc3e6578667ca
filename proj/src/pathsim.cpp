#include "duality/pathsim.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>

#include "duality/core.hpp"
#include "duality/parallel.hpp"
#include "duality/rng.hpp"

namespace duality::pathsim {

namespace {

Mechanism make(std::string name, Pair f00, Pair f01, Pair f10, Pair f11) {
  return Mechanism{std::move(name), {f00, f01, f10, f11}};
}

// Reserved stream coordinates.
constexpr std::uint64_t kTypeStream = 0xffffffffffffff01ULL;
constexpr std::uint64_t kInitialStream = 0xffffffffffffff02ULL;

std::string pair_str(Pair p) {
  return "(" + std::to_string(first(p)) + "," + std::to_string(second(p)) + ")";
}

}  // namespace

Mechanism identity_mechanism() { return make("I", encode(0, 0), encode(0, 1), encode(1, 0), encode(1, 1)); }

const std::vector<Mechanism>& standard_mechanisms() {
  static const std::vector<Mechanism> table = {
      make("R", encode(0, 0), encode(0, 0), encode(1, 1), encode(1, 1)),
      make("C", encode(0, 0), encode(0, 1), encode(0, 1), encode(0, 1)),
      make("A", encode(0, 0), encode(0, 1), encode(0, 1), encode(0, 0)),
      make("D", encode(0, 0), encode(0, 0), encode(0, 1), encode(0, 1)),
      make("BC", encode(0, 0), encode(0, 1), encode(1, 1), encode(1, 1)),
      make("BA", encode(0, 0), encode(0, 1), encode(1, 1), encode(1, 0)),
  };
  return table;
}

const Mechanism& mechanism_by_name(std::string_view name) {
  static const Mechanism id = identity_mechanism();
  if (name == "I") return id;
  for (const auto& m : standard_mechanisms()) {
    if (m.name == name) return m;
  }
  throw ValidationError("unknown mechanism '" + std::string(name) + "'");
}

QParameter QParameter::from(const Rational& q) {
  if (q < Rational(-1) || q >= Rational(1)) throw ValidationError("q must lie in [-1, 1), got " + to_string(q));
  return QParameter(q);
}

QParameter QParameter::parse(const std::string& text) { return from(parse_rational(text)); }

Rational QParameter::pow(std::size_t k) const {
  Rational r(1);
  for (std::size_t i = 0; i < k; ++i) r *= q_;
  return r;
}

MechanismDualityReport is_q_dual_mechanism(const Mechanism& f, const Mechanism& g, const QParameter& q) {
  MechanismDualityReport rep;
  for (Pair x = 0; x < 4; ++x) {
    for (Pair y = 0; y < 4; ++y) {
      const Pair gy = swap(g(swap(y)));
      const int lhs_count = std::popcount(static_cast<unsigned>(x & gy));
      const int rhs_count = std::popcount(static_cast<unsigned>(f(x) & y));
      if (q.pow(static_cast<std::size_t>(lhs_count)) != q.pow(static_cast<std::size_t>(rhs_count))) {
        rep.dual = false;
        rep.witness = std::make_pair(x, y);
        return rep;
      }
    }
  }
  return rep;
}

MechanismMonotoneReport mechanism_monotone(const Mechanism& f) {
  MechanismMonotoneReport rep;
  auto leq = [](Pair a, Pair b) { return (a & ~b & 3) == 0; };
  for (Pair x = 0; x < 4; ++x) {
    for (Pair y = 0; y < 4; ++y) {
      if (leq(x, y) && !leq(f(x), f(y))) {
        rep.monotone = false;
        rep.witness = std::make_pair(x, y);
        return rep;
      }
    }
  }
  return rep;
}

SpinConfiguration SpinConfiguration::from_mask(std::uint64_t mask, std::size_t n) {
  if (n > 64) throw ValidationError("SpinConfiguration::from_mask supports at most 64 sites");
  SpinConfiguration s(n);
  for (std::size_t i = 0; i < n; ++i) s.bits_[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
  return s;
}

SpinConfiguration SpinConfiguration::from_bits(std::vector<std::uint8_t> bits) {
  for (auto& b : bits) b = b ? 1 : 0;
  SpinConfiguration s;
  s.bits_ = std::move(bits);
  return s;
}

std::size_t SpinConfiguration::count() const {
  std::size_t c = 0;
  for (auto b : bits_) c += b;
  return c;
}

std::size_t SpinConfiguration::meet_count(const SpinConfiguration& o) const {
  if (o.size() != size()) throw DimensionError("meet_count: configurations differ in length");
  std::size_t c = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) c += bits_[i] & o.bits_[i];
  return c;
}

SpinConfiguration SpinConfiguration::complement() const {
  SpinConfiguration s(size());
  for (std::size_t i = 0; i < bits_.size(); ++i) s.bits_[i] = static_cast<std::uint8_t>(1 - bits_[i]);
  return s;
}

bool SpinConfiguration::leq(const SpinConfiguration& o) const {
  if (o.size() != size()) throw DimensionError("leq: configurations differ in length");
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] > o.bits_[i]) return false;
  }
  return true;
}

std::uint64_t SpinConfiguration::mask() const {
  if (size() > 64) throw ValidationError("SpinConfiguration::mask supports at most 64 sites");
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) m |= static_cast<std::uint64_t>(bits_[i]) << i;
  return m;
}

RateTable::RateTable(std::size_t sites, std::size_t labels) : n_(sites), k_(labels), r_(sites * sites * labels, 0.0) {
  if (sites < 2) throw ValidationError("rate table needs at least two sites");
  if (labels == 0) throw ValidationError("rate table needs at least one label");
}

RateTable RateTable::complete_graph(std::size_t sites, const std::vector<double>& rate_per_label) {
  RateTable t(sites, rate_per_label.size());
  for (std::size_t k = 0; k < rate_per_label.size(); ++k) {
    for (std::size_t i = 0; i < sites; ++i) {
      for (std::size_t j = 0; j < sites; ++j) {
        if (i != j) t.set(k, i, j, rate_per_label[k]);
      }
    }
  }
  return t;
}

void RateTable::set(std::size_t k, std::size_t i, std::size_t j, double v) {
  if (k >= k_ || i >= n_ || j >= n_) throw DimensionError("rate table index out of range");
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("rates must be finite and nonnegative");
  if (i == j && v != 0.0) throw ValidationError("rates on the diagonal must be zero");
  r_[(k * n_ + i) * n_ + j] = v;
}

bool RateTable::symmetric() const {
  for (std::size_t k = 0; k < k_; ++k) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        if ((*this)(k, i, j) != (*this)(k, j, i)) return false;
      }
    }
  }
  return true;
}

double RateTable::total() const {
  double s = 0.0;
  for (double v : r_) s += v;
  return s;
}

GraphicalRepresentation::GraphicalRepresentation(RateTable rates, double horizon, std::uint64_t seed,
                                                 std::vector<ArrowEvent> events)
    : rates_(std::move(rates)), horizon_(horizon), seed_(seed), canonical_(std::move(events)) {
  for (const auto& e : canonical_) {
    if (e.time < 0.0 || e.time > horizon_) throw ValidationError("arrow time outside [0, T]");
    if (e.from == e.to) throw ValidationError("arrow endpoints must differ");
    if (e.from >= rates_.sites() || e.to >= rates_.sites() || e.label >= rates_.labels()) {
      throw ValidationError("arrow refers to an unknown site or label");
    }
  }
  std::sort(canonical_.begin(), canonical_.end(), [](const ArrowEvent& a, const ArrowEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.from != b.from) return a.from < b.from;
    if (a.to != b.to) return a.to < b.to;
    return a.label < b.label;
  });
}

std::vector<ArrowEvent> GraphicalRepresentation::events() const {
  if (!reversed_) return canonical_;
  std::vector<ArrowEvent> out;
  out.reserve(canonical_.size());
  for (auto it = canonical_.rbegin(); it != canonical_.rend(); ++it) {
    out.push_back(ArrowEvent{horizon_ - it->time, it->to, it->from, it->label});
  }
  return out;
}

GraphicalRepresentation GraphicalRepresentation::reversed() const {
  GraphicalRepresentation r = *this;
  r.reversed_ = !reversed_;
  return r;
}

bool GraphicalRepresentation::operator==(const GraphicalRepresentation& o) const {
  return horizon_ == o.horizon_ && seed_ == o.seed_ && reversed_ == o.reversed_ && canonical_ == o.canonical_ &&
         rates_.sites() == o.rates_.sites() && rates_.labels() == o.rates_.labels();
}

GraphicalRepresentation sample_graphical_representation(const RateTable& rates, double horizon, std::uint64_t seed) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be finite and >= 0");
  std::vector<ArrowEvent> events;
  const std::size_t n = rates.sites();
  for (std::size_t k = 0; k < rates.labels(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double r = rates(k, i, j);
        if (r <= 0.0) continue;
        SplitMix64 rng(stream_seed(seed, i, j, k));
        double t = rng.exponential(r);
        while (t <= horizon) {
          events.push_back(ArrowEvent{t, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                      static_cast<std::uint32_t>(k)});
          t += rng.exponential(r);
        }
      }
    }
  }
  return GraphicalRepresentation(rates, horizon, seed, std::move(events));
}

SpinConfiguration Trajectory::state_after(std::size_t k) const {
  SpinConfiguration s = initial;
  for (std::size_t e = 0; e < k && e < deltas.size(); ++e) {
    s.set(deltas[e].from, first(deltas[e].after));
    s.set(deltas[e].to, second(deltas[e].after));
  }
  return s;
}

namespace {

template <class Pick>
Trajectory run(const SpinConfiguration& x0, const std::vector<ArrowEvent>& events, Pick&& pick) {
  Trajectory tr{x0, x0, {}};
  tr.deltas.reserve(events.size());
  SpinConfiguration& s = tr.final_state;
  for (std::size_t idx = 0; idx < events.size(); ++idx) {
    const ArrowEvent& e = events[idx];
    const Pair before = encode(s[e.from], s[e.to]);
    const Pair after = pick(idx, e)(before);
    s.set(e.from, first(after));
    s.set(e.to, second(after));
    tr.deltas.push_back(Delta{e.time, e.from, e.to, e.label, before, after});
  }
  return tr;
}

void require_labels(const GraphicalRepresentation& g, const std::vector<Mechanism>& m, const char* what) {
  if (m.size() < g.rates().labels()) {
    throw ValidationError(std::string(what) + ": " + std::to_string(g.rates().labels()) + " labels but " +
                          std::to_string(m.size()) + " mechanisms");
  }
}

void require_sites(const SpinConfiguration& s, const GraphicalRepresentation& g) {
  if (s.size() != g.sites()) throw DimensionError("configuration length differs from the number of sites");
}

}  // namespace

Trajectory evolve_forward(const SpinConfiguration& x0, const GraphicalRepresentation& g,
                          const std::vector<Mechanism>& mechanisms) {
  require_labels(g, mechanisms, "evolve_forward");
  require_sites(x0, g);
  return run(x0, g.events(), [&](std::size_t, const ArrowEvent& e) -> const Mechanism& { return mechanisms[e.label]; });
}

Trajectory evolve_backward(const SpinConfiguration& y0, const GraphicalRepresentation& g,
                           const std::vector<Mechanism>& dual_mechanisms) {
  // Reading the reversed representation forward swaps the arrow endpoints, which
  // is exactly (y_i, y_j) <- g((y_i, y_j)^+)^+ on the original arrow.
  return evolve_forward(y0, g.reversed(), dual_mechanisms);
}

namespace {

// H-values q^k for k = 0..n.
std::vector<Rational> powers(const QParameter& q, std::size_t n) {
  std::vector<Rational> p(n + 1);
  p[0] = Rational(1);
  for (std::size_t k = 1; k <= n; ++k) p[k] = p[k - 1] * q.value();
  return p;
}

// Compares q^{|X_k ^ Y^(k)|} for k = 0..m where X_k is the forward state after k
// events and Y^(k) the backward state having read events m..k+1.
template <class PickF, class PickB>
PathwiseReport compare_intervals(const SpinConfiguration& x0, const SpinConfiguration& y0, const QParameter& q,
                                 const std::vector<ArrowEvent>& events, PickF&& pick_f, PickB&& pick_b) {
  const std::size_t m = events.size();
  const std::size_t n = x0.size();
  std::vector<SpinConfiguration> back(m + 1);
  back[m] = y0;
  for (std::size_t k = m; k-- > 0;) {
    SpinConfiguration s = back[k + 1];
    const ArrowEvent& e = events[k];
    const Pair out = swap(pick_b(k)(encode(s[e.to], s[e.from])));
    s.set(e.from, first(out));
    s.set(e.to, second(out));
    back[k] = std::move(s);
  }
  const auto pw = powers(q, n);
  PathwiseReport rep;
  SpinConfiguration x = x0;
  const Rational reference = pw[x.meet_count(back[0])];
  for (std::size_t k = 0; k <= m; ++k) {
    if (k > 0) {
      const ArrowEvent& e = events[k - 1];
      const Pair out = pick_f(k - 1)(encode(x[e.from], x[e.to]));
      x.set(e.from, first(out));
      x.set(e.to, second(out));
    }
    ++rep.intervals_checked;
    if (pw[x.meet_count(back[k])] != reference) {
      rep.holds = false;
      rep.first_failure = k;
      return rep;
    }
  }
  return rep;
}

void require_dual_pairs(const std::vector<Mechanism>& f, const std::vector<Mechanism>& g, const QParameter& q,
                        std::size_t labels) {
  for (std::size_t k = 0; k < labels; ++k) {
    const auto r = is_q_dual_mechanism(f[k], g[k], q);
    if (!r.dual) {
      throw ValidationError("label " + std::to_string(k) + ": mechanisms " + f[k].name + " and " + g[k].name +
                            " are not q-dual for q = " + q.str() + " (witness x = " + pair_str(r.witness->first) +
                            ", y = " + pair_str(r.witness->second) + ")");
    }
  }
}

}  // namespace

PathwiseReport verify_strong_pathwise(const SpinConfiguration& x0, const SpinConfiguration& y0, const QParameter& q,
                                      const GraphicalRepresentation& g, const std::vector<Mechanism>& forward,
                                      const std::vector<Mechanism>& backward) {
  require_labels(g, forward, "verify_strong_pathwise");
  require_labels(g, backward, "verify_strong_pathwise");
  require_sites(x0, g);
  require_sites(y0, g);
  if (g.is_reversed()) throw ValidationError("verify_strong_pathwise expects a forward representation");
  if (!g.rates().symmetric()) throw ValidationError("verify_strong_pathwise: rate table is not symmetric");
  require_dual_pairs(forward, backward, q, g.rates().labels());
  const auto events = g.events();
  return compare_intervals(
      x0, y0, q, events, [&](std::size_t k) -> const Mechanism& { return forward[events[k].label]; },
      [&](std::size_t k) -> const Mechanism& { return backward[events[k].label]; });
}

AllPairsReport verify_all_pairs(const QParameter& q, const GraphicalRepresentation& g,
                                const std::vector<Mechanism>& forward, const std::vector<Mechanism>& backward) {
  const std::size_t n = g.sites();
  if (n > 10) throw ValidationError("verify_all_pairs supports at most 10 sites");
  AllPairsReport rep;
  const std::uint64_t states = std::uint64_t{1} << n;
  for (std::uint64_t x = 0; x < states; ++x) {
    for (std::uint64_t y = 0; y < states; ++y) {
      const auto r = verify_strong_pathwise(SpinConfiguration::from_mask(x, n), SpinConfiguration::from_mask(y, n), q,
                                            g, forward, backward);
      ++rep.pairs_checked;
      rep.intervals_checked += r.intervals_checked;
      if (!r.holds) {
        rep.holds = false;
        rep.failing_pair = std::make_pair(x, y);
        return rep;
      }
    }
  }
  return rep;
}

WalkReport rw_siegmund_pathwise(long x, long y, std::size_t steps, std::uint64_t seed) {
  if (x < 0 || y < 0) throw ValidationError("rw_siegmund_pathwise: start points must be nonnegative");
  SplitMix64 rng(seed);
  std::vector<int> w(steps);
  for (auto& s : w) s = (rng() >> 63) ? 1 : -1;

  WalkReport rep;
  rep.forward.resize(steps + 1);
  rep.backward.resize(steps + 1);
  rep.forward[0] = x;
  for (std::size_t n = 0; n < steps; ++n) {
    const long cur = rep.forward[n];
    rep.forward[n + 1] = cur > 0 ? cur + w[n] : 0;
  }
  rep.backward[0] = y;
  for (std::size_t n = 1; n <= steps; ++n) {
    const long cur = rep.backward[n - 1];
    const long step = w[steps - n];
    rep.backward[n] = cur > 0 ? cur - step : std::max(cur - step, 0L);
  }
  rep.indicator = rep.forward[0] <= rep.backward[steps] ? 1 : 0;
  for (std::size_t n = 0; n <= steps; ++n) {
    const int ind = rep.forward[n] <= rep.backward[steps - n] ? 1 : 0;
    if (ind != rep.indicator) {
      rep.holds = false;
      break;
    }
  }
  return rep;
}

Rational hypergeometric_duality_exact(std::size_t n, std::size_t a, std::size_t b, const Rational& q) {
  if (a > n || b > n) throw ValidationError("hypergeometric_duality: need 0 <= a, b <= N");
  using boost::multiprecision::cpp_int;
  auto binom = [](std::size_t top, std::size_t k) {
    if (k > top) return cpp_int(0);
    cpp_int r = 1;
    for (std::size_t i = 0; i < k; ++i) r = r * (top - i) / (i + 1);
    return r;
  };
  const cpp_int total = binom(n, b);
  Rational sum(0);
  Rational qz(1);
  for (std::size_t z = 0; z <= std::min(a, b); ++z) {
    if (z > 0) qz *= q;
    if (b - z > n - a) continue;
    sum += Rational(binom(a, z) * binom(n - a, b - z), total) * qz;
  }
  return sum;
}

double hypergeometric_duality_value(std::size_t n, std::size_t a, std::size_t b, double q) {
  if (a > n || b > n) throw ValidationError("hypergeometric_duality: need 0 <= a, b <= N");
  if (n <= 30) return static_cast<double>(hypergeometric_duality_exact(n, a, b, Rational(q)));
  auto lbinom = [](double top, double k) { return std::lgamma(top + 1) - std::lgamma(k + 1) - std::lgamma(top - k + 1); };
  const double lt = lbinom(static_cast<double>(n), static_cast<double>(b));
  double sum = 0.0;
  for (std::size_t z = 0; z <= std::min(a, b); ++z) {
    if (b - z > n - a) continue;
    const double w = std::exp(lbinom(static_cast<double>(a), static_cast<double>(z)) +
                              lbinom(static_cast<double>(n - a), static_cast<double>(b - z)) - lt);
    sum += w * (z == 0 ? 1.0 : std::pow(q, static_cast<double>(z)));
  }
  return sum;
}

namespace {

// Uniform random subset of size k (partial Fisher-Yates).
SpinConfiguration random_subset(std::size_t n, std::size_t k, SplitMix64& rng) {
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  SpinConfiguration s(n);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    s.set(idx[i], 1);
  }
  return s;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

SimulationReport mc_exchangeable_duality(const ExchangeableConfig& cfg) {
  const double start = now_seconds();
  if (cfg.a > cfg.sites || cfg.b > cfg.sites) throw ValidationError("mc_exchangeable_duality: need a, b <= N");
  if (cfg.grid_points < 2) throw ValidationError("mc_exchangeable_duality: need at least two grid points");
  if (!(cfg.t >= 0.0)) throw ValidationError("mc_exchangeable_duality: t must be >= 0");
  if (cfg.replicas < 2) throw ValidationError("mc_exchangeable_duality: need at least two replicas");
  const std::size_t n = cfg.sites;
  const std::size_t gp = cfg.grid_points;
  const RateTable rates = RateTable::complete_graph(n, {cfg.rate});
  const std::vector<Mechanism> fwd{cfg.mechanisms.forward};
  const std::vector<Mechanism> bwd{cfg.mechanisms.backward};
  const auto check = is_q_dual_mechanism(cfg.mechanisms.forward, cfg.mechanisms.backward, cfg.q);
  if (!check.dual) throw ValidationError("mc_exchangeable_duality: mechanisms are not q-dual");

  std::vector<double> grid(gp);
  for (std::size_t i = 0; i < gp; ++i) grid[i] = cfg.t * static_cast<double>(i) / static_cast<double>(gp - 1);

  // Duality values are tabulated once per (|A|, |B|).
  std::vector<double> table((n + 1) * (n + 1));
  for (std::size_t a = 0; a <= n; ++a) {
    for (std::size_t b = 0; b <= n; ++b) table[a * (n + 1) + b] = hypergeometric_duality_value(n, a, b, cfg.q.as_double());
  }

  std::vector<double> values(cfg.replicas * gp);
  parallel_for(cfg.replicas, [&](std::size_t r) {
    const std::uint64_t rs = stream_seed(cfg.seed, r);
    SplitMix64 init(stream_seed(rs, kInitialStream));
    const SpinConfiguration a0 = random_subset(n, cfg.a, init);
    const SpinConfiguration b0 = random_subset(n, cfg.b, init);
    const GraphicalRepresentation g = sample_graphical_representation(rates, cfg.t, rs);
    const auto events = g.events();
    const Trajectory fw = evolve_forward(a0, g, fwd);
    const Trajectory bw = evolve_backward(b0, g, bwd);
    // |A_s| uses events with time <= s; |B_{t-s}| uses events with time > s.
    for (std::size_t i = 0; i < gp; ++i) {
      const double s = grid[i];
      std::size_t k = 0;
      while (k < events.size() && events[k].time <= s) ++k;
      const std::size_t ca = fw.state_after(k).count();
      const std::size_t cb = bw.state_after(events.size() - k).count();
      values[r * gp + i] = table[ca * (n + 1) + cb];
    }
  });

  SimulationReport rep;
  rep.experiment = "exchangeable-duality";
  rep.replicas = cfg.replicas;
  rep.seed = cfg.seed;
  rep.criterion = "all pairwise differences of grid estimates within 3 pooled SE";
  std::vector<double> col(cfg.replicas);
  for (std::size_t i = 0; i < gp; ++i) {
    for (std::size_t r = 0; r < cfg.replicas; ++r) col[r] = values[r * gp + i];
    rep.estimates.push_back(summarize("s=" + format_double(grid[i]), col));
  }
  double worst = 0.0;
  bool pass = true;
  for (std::size_t i = 0; i < gp; ++i) {
    for (std::size_t j = i + 1; j < gp; ++j) {
      const double diff = std::abs(rep.estimates[i].mean - rep.estimates[j].mean);
      const double pooled = std::sqrt(rep.estimates[i].se * rep.estimates[i].se + rep.estimates[j].se * rep.estimates[j].se);
      if (diff == 0.0) continue;
      const double z = pooled > 0.0 ? diff / pooled : std::numeric_limits<double>::infinity();
      worst = std::max(worst, z);
      if (diff > 3.0 * pooled) pass = false;
    }
  }
  rep.pass = pass;
  rep.details["sites"] = n;
  rep.details["a"] = cfg.a;
  rep.details["b"] = cfg.b;
  rep.details["q"] = cfg.q.str();
  rep.details["forward"] = cfg.mechanisms.forward.name;
  rep.details["backward"] = cfg.mechanisms.backward.name;
  rep.details["rate_per_ordered_pair"] = cfg.rate;
  rep.details["t"] = cfg.t;
  rep.details["max_pairwise_z"] = worst;
  rep.elapsed_seconds = now_seconds() - start;
  return rep;
}

RandomizedMechanism::RandomizedMechanism(MechanismPair first, MechanismPair second, double p, std::uint64_t type_seed)
    : first_(std::move(first)), second_(std::move(second)), p_(p), type_seed_(type_seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("randomized mechanism: p must lie in [0, 1]");
}

int RandomizedMechanism::type_of(std::size_t arrow_index) const {
  if (p_ >= 1.0) return 0;
  if (p_ <= 0.0) return 1;
  SplitMix64 rng(stream_seed(type_seed_, kTypeStream, arrow_index));
  return rng.uniform() < p_ ? 0 : 1;
}

PathwiseReport verify_randomized_pathwise(const SpinConfiguration& x0, const SpinConfiguration& y0,
                                          const QParameter& q, const GraphicalRepresentation& g,
                                          const RandomizedMechanism& mech) {
  require_sites(x0, g);
  require_sites(y0, g);
  if (!g.rates().symmetric()) throw ValidationError("verify_randomized_pathwise: rate table is not symmetric");
  for (int t = 0; t < 2; ++t) {
    if (!is_q_dual_mechanism(mech.pair(t).forward, mech.pair(t).backward, q).dual) {
      throw ValidationError("verify_randomized_pathwise: mechanism pair " + std::to_string(t) + " is not q-dual");
    }
  }
  const auto events = g.events();
  return compare_intervals(
      x0, y0, q, events, [&](std::size_t k) -> const Mechanism& { return mech.pair(mech.type_of(k)).forward; },
      [&](std::size_t k) -> const Mechanism& { return mech.pair(mech.type_of(k)).backward; });
}

SimulationReport conditional_duality_test(const RandomizedMechanism& mech, const ConditionalConfig& cfg) {
  const double start = now_seconds();
  const std::size_t n = cfg.sites;
  if (n > 64) throw ValidationError("conditional_duality_test supports at most 64 sites");
  const RateTable rates = RateTable::complete_graph(n, {cfg.rate});
  const SpinConfiguration x = SpinConfiguration::from_mask(cfg.x, n);
  const SpinConfiguration y = SpinConfiguration::from_mask(cfg.y, n);
  const auto pw = powers(cfg.q, n);

  std::vector<double> lhs(cfg.replicas), rhs(cfg.replicas);
  parallel_for(cfg.replicas, [&](std::size_t r) {
    // Forward and backward sides use independent arrow families; types are
    // shared through the arrow index.
    const auto gf = sample_graphical_representation(rates, cfg.t, stream_seed(cfg.seed, 1, r));
    const auto ef = gf.events();
    const Trajectory xf =
        run(x, ef, [&](std::size_t k, const ArrowEvent&) -> const Mechanism& { return mech.pair(mech.type_of(k)).forward; });
    lhs[r] = static_cast<double>(pw[xf.final_state.meet_count(y)]);

    const auto gb = sample_graphical_representation(rates, cfg.t, stream_seed(cfg.seed, 2, r));
    const auto eb = gb.events();
    SpinConfiguration s = y;
    for (std::size_t k = eb.size(); k-- > 0;) {
      const ArrowEvent& e = eb[k];
      const Pair out = swap(mech.pair(mech.type_of(k)).backward(encode(s[e.to], s[e.from])));
      s.set(e.from, first(out));
      s.set(e.to, second(out));
    }
    rhs[r] = static_cast<double>(pw[x.meet_count(s)]);
  });

  SimulationReport rep;
  rep.experiment = "conditional-duality";
  rep.replicas = cfg.replicas;
  rep.seed = cfg.seed;
  rep.criterion = "|E[H(X_t, y) | types] - E[H(x, Y_t) | types]| <= 3 combined SE";
  rep.estimates.push_back(summarize("forward", lhs));
  rep.estimates.push_back(summarize("backward", rhs));
  const double diff = std::abs(rep.estimates[0].mean - rep.estimates[1].mean);
  const double se = std::sqrt(rep.estimates[0].se * rep.estimates[0].se + rep.estimates[1].se * rep.estimates[1].se);
  rep.pass = diff <= 3.0 * se;
  rep.details["sites"] = n;
  rep.details["q"] = cfg.q.str();
  rep.details["p"] = mech.p();
  rep.details["first_pair"] = mech.pair(0).forward.name + "/" + mech.pair(0).backward.name;
  rep.details["second_pair"] = mech.pair(1).forward.name + "/" + mech.pair(1).backward.name;
  rep.details["difference"] = diff;
  rep.details["combined_se"] = se;
  rep.elapsed_seconds = now_seconds() - start;
  return rep;
}

}  // namespace duality::pathsim
