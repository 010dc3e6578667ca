#include "duality/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "duality/algebra.hpp"
#include "duality/cone.hpp"
#include "duality/core.hpp"
#include "duality/matrix_io.hpp"
#include "duality/parallel.hpp"
#include "duality/pathsim.hpp"
#include "duality/rational.hpp"
#include "duality/report.hpp"
#include "duality/rng.hpp"
#include "duality/scaling.hpp"

namespace duality::cli {

namespace {

using Json = OrderedJson;

/// Bad invocation or configuration; maps to exit 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::size_t replicas = 0;  // 0: command default
  double tol_duality = default_tolerances().duality;
  double tol_row = default_tolerances().row;
  std::string out;
  std::string format = "json";
  std::string config;
};

struct Outcome {
  Json result = Json::object();
  bool pass = false;
  std::optional<std::string> csv;  // replaces the flattened CSV when set
  bool uses_seed = false;
};

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json complex_json(const std::complex<double>& z) { return Json::array({z.real(), z.imag()}); }

Vector read_vector(const std::string& path) {
  const Matrix m = io::read_matrix(path);
  if (m.rows() != 1 && m.cols() != 1) {
    throw DimensionError(path + ": expected a single row or column, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Tolerances tolerances_from(const Globals& g) {
  Tolerances t = default_tolerances();
  t.duality = g.tol_duality;
  t.row = g.tol_row;
  return t;
}

Json tolerances_json(const Tolerances& t) {
  Json j;
  j["entry"] = t.entry;
  j["row"] = t.row;
  j["spectral"] = t.spectral;
  j["duality"] = t.duality;
  j["semigroup"] = t.semigroup;
  j["reversibility"] = t.reversibility;
  j["lp"] = t.lp;
  j["pivot"] = t.pivot;
  return j;
}

std::size_t replicas_or(const Globals& g, std::size_t fallback) { return g.replicas > 0 ? g.replicas : fallback; }

// ---------------------------------------------------------------- flattening

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", rows);
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    rows.emplace_back(prefix, std::isfinite(v) ? format_double(v) : "null");
  } else if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      s = q + "\"";
    }
    rows.emplace_back(prefix, s);
  } else {
    rows.emplace_back(prefix, j.dump());
  }
}

std::string flatten_csv(const Json& j) {
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(j, "", rows);
  std::string out = "key,value\n";
  for (const auto& [k, v] : rows) out += k + "," + v + "\n";
  return out;
}

// --------------------------------------------------------------- spin inputs

pathsim::SpinConfiguration parse_bits(const std::string& text, std::size_t n, const char* what) {
  if (text.size() != n) {
    throw UsageError(std::string(what) + ": expected " + std::to_string(n) + " bits, got '" + text + "'");
  }
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (text[i] != '0' && text[i] != '1') {
      throw UsageError(std::string(what) + ": column " + std::to_string(i + 1) + ": expected 0 or 1");
    }
    bits[i] = static_cast<std::uint8_t>(text[i] - '0');
  }
  return pathsim::SpinConfiguration::from_bits(std::move(bits));
}

std::string bits_string(const pathsim::SpinConfiguration& s) {
  std::string out;
  for (auto b : s.bits()) out += static_cast<char>('0' + b);
  return out;
}

std::string pair_string(pathsim::Pair p) { return std::to_string(pathsim::first(p)) + std::to_string(pathsim::second(p)); }

struct IpsInputs {
  std::size_t sites = 0;
  double horizon = 1.0;
  std::vector<double> rates;
  std::vector<std::string> rate_tables;
  std::vector<std::string> mechanisms;  // "F/G" per label
  std::string q = "0";
  std::string x;
  std::string y;
};

void add_ips_options(CLI::App* app, IpsInputs& in) {
  app->add_option("-N,--sites", in.sites, "Number of sites");
  app->add_option("-T,--horizon", in.horizon, "Time horizon");
  app->add_option("--rate", in.rates, "Rate per ordered pair on the complete graph, one per label");
  app->add_option("--rate-table", in.rate_tables, "N x N rate matrix file, one per label");
  app->add_option("--mechanism", in.mechanisms, "Forward/backward mechanism names per label, e.g. R/A");
  app->add_option("--q", in.q, "q as p/r or decimal");
  app->add_option("--x", in.x, "Initial forward configuration as a bit string");
  app->add_option("--y", in.y, "Initial dual configuration as a bit string");
}

struct IpsSetup {
  pathsim::RateTable rates{2, 1};
  std::vector<pathsim::Mechanism> forward;
  std::vector<pathsim::Mechanism> backward;
  pathsim::QParameter q = pathsim::QParameter::from(Rational(0));
};

IpsSetup build_ips(const IpsInputs& in) {
  if (in.sites < 2) throw UsageError("--sites must be >= 2");
  if (!(in.horizon >= 0.0)) throw UsageError("--horizon must be >= 0");
  if (in.mechanisms.empty()) throw UsageError("at least one --mechanism F/G is required");
  if (!in.rates.empty() && !in.rate_tables.empty()) throw UsageError("give either --rate or --rate-table, not both");
  const std::size_t labels = in.mechanisms.size();
  IpsSetup s;
  if (!in.rate_tables.empty()) {
    if (in.rate_tables.size() != labels) throw UsageError("one --rate-table per mechanism label is required");
    s.rates = pathsim::RateTable(in.sites, labels);
    for (std::size_t k = 0; k < labels; ++k) {
      const Matrix m = io::read_matrix(in.rate_tables[k]);
      if (static_cast<std::size_t>(m.rows()) != in.sites || static_cast<std::size_t>(m.cols()) != in.sites) {
        throw DimensionError(in.rate_tables[k] + ": rate table must be " + std::to_string(in.sites) + "x" +
                             std::to_string(in.sites));
      }
      for (std::size_t i = 0; i < in.sites; ++i) {
        for (std::size_t j = 0; j < in.sites; ++j) {
          if (i != j) s.rates.set(k, i, j, m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
      }
    }
  } else {
    std::vector<double> r = in.rates.empty() ? std::vector<double>{1.0} : in.rates;
    if (r.size() == 1 && labels > 1) r.assign(labels, r[0]);
    if (r.size() != labels) throw UsageError("one --rate per mechanism label is required");
    s.rates = pathsim::RateTable::complete_graph(in.sites, r);
  }
  for (const auto& m : in.mechanisms) {
    const auto slash = m.find('/');
    if (slash == std::string::npos) throw UsageError("--mechanism expects F/G, got '" + m + "'");
    s.forward.push_back(pathsim::mechanism_by_name(m.substr(0, slash)));
    s.backward.push_back(pathsim::mechanism_by_name(m.substr(slash + 1)));
  }
  s.q = pathsim::QParameter::parse(in.q);
  return s;
}

void write_trajectory(const std::string& path, const pathsim::Trajectory& tr) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot open trajectory file '" + path + "'");
  f << "time,i,j,label,bit_i,bit_j\n";
  for (const auto& d : tr.deltas) {
    f << format_double(d.time) << "," << d.from << "," << d.to << "," << d.label << "," << pathsim::first(d.after)
      << "," << pathsim::second(d.after) << "\n";
  }
  if (!f) throw UsageError("failed writing trajectory file '" + path + "'");
}

void require_seed(const CLI::App& root, const char* command) {
  if (root.get_option("--seed")->count() == 0) {
    throw UsageError(std::string(command) + " is stochastic: --seed is required");
  }
}

// --------------------------------------------------------------- subcommands

struct Command {
  CLI::App* app = nullptr;
  std::function<Outcome()> run;
  std::vector<std::string> required;  // long option names that must be set
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App root{"Construct, solve and verify dualities of finite Markov processes and particle systems", kToolName};
  root.set_help_flag("--help", "Print this help message and exit");
  root.option_defaults()->always_capture_default();
  root.require_subcommand(1);
  root.fallthrough();
  root.set_version_flag("--version", kVersion);

  Globals g;
  root.add_option("--seed", g.seed, "Master seed (u64)");
  root.add_option("--replicas", g.replicas, "Monte Carlo replicas (command default when omitted)");
  root.add_option("--tol-duality", g.tol_duality, "Duality residual tolerance");
  root.add_option("--tol-row", g.tol_row, "Row-sum tolerance");
  root.add_option("--out", g.out, "Report path (stdout when omitted)");
  root.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  root.add_option("--config", g.config, "JSON config; keys are option names");

  std::map<std::string, Command> commands;
  auto sub = [&](const std::string& name, const std::string& help) {
    Command& c = commands[name];
    c.app = root.add_subcommand(name, help);
    return &c;
  };

  // check-duality
  std::string p_path, q_path, h_path, l_path, mu_path;
  bool generators = false;
  {
    Command* c = sub("check-duality", "Residual of P H = H Q^T (or of the generator relation)");
    c->app->add_option("--p", p_path, "Matrix P (or generator L^X)");
    c->app->add_option("--q", q_path, "Matrix Q (or generator L^Y)");
    c->app->add_option("--h", h_path, "Duality matrix H");
    c->app->add_flag("--generators", generators, "Treat P and Q as generators");
    c->required = {"--p", "--q", "--h"};
    c->run = [&]() {
      const Tolerances tol = tolerances_from(g);
      Outcome o;
      const DualityMatrix h = DualityMatrix::from(io::read_matrix(h_path));
      if (generators) {
        const auto lx = GeneratorMatrix::from(io::read_matrix(p_path), tol);
        const auto ly = GeneratorMatrix::from(io::read_matrix(q_path), tol);
        const auto r = algebra::check_duality_generators(lx, ly, h, tol);
        o.result["generator_residual"] = r.generator_residual;
        Json sg = Json::array();
        for (std::size_t i = 0; i < r.semigroup_times.size(); ++i) {
          sg.push_back(Json{{"t", r.semigroup_times[i]}, {"residual", r.semigroup_residuals[i]}});
        }
        o.result["semigroup_residuals"] = sg;
        o.pass = r.pass;
      } else {
        const auto p = StochasticMatrix::from(io::read_matrix(p_path), tol);
        const auto q = StochasticMatrix::from(io::read_matrix(q_path), tol);
        const double res = algebra::check_duality_discrete(p, q, h);
        o.result["residual"] = res;
        o.pass = res <= tol.duality;
      }
      return o;
    };
  }

  // solve-dual
  {
    Command* c = sub("solve-dual", "Find Q with P H = H Q^T and decide whether it can be stochastic");
    c->app->add_option("--p", p_path, "Matrix P");
    c->app->add_option("--h", h_path, "Duality matrix H");
    c->required = {"--p", "--h"};
    c->run = [&]() {
      const Tolerances tol = tolerances_from(g);
      const auto p = StochasticMatrix::from(io::read_matrix(p_path), tol);
      const DualityMatrix h = DualityMatrix::from(io::read_matrix(h_path));
      const auto r = algebra::solve_dual(p, h, tol);
      Outcome o;
      o.result["status"] = algebra::to_string(r.status);
      o.result["unique"] = r.unique;
      o.result["dual"] = r.dual ? matrix_json(*r.dual) : Json(nullptr);
      o.result["column_residuals"] = r.column_residuals;
      o.result["first_failing_column"] = r.first_failing_column ? Json(*r.first_failing_column) : Json(nullptr);
      const auto inv = algebra::check_v1plus_invariance(p.matrix(), h, tol);
      Json ij;
      ij["invariant"] = inv.invariant;
      ij["violating_column"] = inv.violating_column ? Json(*inv.violating_column) : Json(nullptr);
      ij["certificate"] = inv.certificate;
      ij["phase1_objective"] = inv.phase1_objective;
      o.result["v1plus_invariance"] = ij;
      o.pass = r.status == algebra::DualStatus::exists_stochastic;
      return o;
    };
  }

  // siegmund
  {
    Command* c = sub("siegmund", "Siegmund dual of a stochastically monotone chain");
    c->app->add_option("--p", p_path, "Matrix P");
    c->required = {"--p"};
    c->run = [&]() {
      const Tolerances tol = tolerances_from(g);
      const auto p = StochasticMatrix::from(io::read_matrix(p_path), tol);
      Outcome o;
      const auto mono = algebra::check_monotone(p.matrix());
      o.result["monotone"] = mono.monotone;
      if (!mono.monotone) {
        const auto& w = *mono.witness;
        o.result["witness"] = Json{{"x", w[0]}, {"y", w[1]}, {"z", w[2]}};
        o.pass = false;
        return o;
      }
      const auto d = algebra::siegmund_dual(p);
      const DualityMatrix h = algebra::siegmund_duality_matrix(p.rows());
      const double res = algebra::duality_residual(p.matrix(), d.restricted(), h.matrix());
      o.result["q"] = matrix_json(d.q.matrix());
      o.result["defect"] = d.defect;
      o.result["residual"] = res;
      o.pass = res <= tol.duality;
      return o;
    };
  }

  // cone-dual
  {
    Command* c = sub("cone-dual", "Cone dual on the extremal columns of H");
    c->app->add_option("--p", p_path, "Stochastic matrix P (discrete time)");
    c->app->add_option("--l", l_path, "Generator L (continuous time)");
    c->app->add_option("--h", h_path, "Duality matrix H");
    c->required = {"--h"};
    c->run = [&]() {
      const Tolerances tol = tolerances_from(g);
      if (p_path.empty() == l_path.empty()) throw UsageError("cone-dual needs exactly one of --p and --l");
      const Matrix h = io::read_matrix(h_path);
      Outcome o;
      const auto s = cone::analyze(h);
      o.result["extremal_indices"] = s.extremal;
      o.result["representative"] = s.representative;
      o.result["simplex"] = s.simplex;
      o.result["Pi"] = s.pi ? matrix_json(*s.pi) : Json(nullptr);
      if (!s.simplex) {
        o.result["error"] = "extremal columns are not affinely independent; no unique decomposition";
        return o;
      }
      try {
        if (!p_path.empty()) {
          const auto p = StochasticMatrix::from(io::read_matrix(p_path), tol);
          if (p.rows() != static_cast<std::size_t>(h.rows())) throw DimensionError("P and H have different row counts");
          const Matrix r = cone::cone_dual(p, h);
          const Matrix qh = cone::jump_dual(r, s, static_cast<std::size_t>(h.cols()));
          const double inter = cone::intertwining_residual(qh, *s.pi, r);
          const double dual = algebra::duality_residual(p.matrix(), qh, h);
          o.result["R_matrix"] = matrix_json(r);
          o.result["Q_hat"] = matrix_json(qh);
          o.result["residuals"] = Json{{"duality", dual}, {"intertwining", inter}};
          o.pass = dual <= tol.duality && inter <= tol.duality;
        } else {
          const auto l = GeneratorMatrix::from(io::read_matrix(l_path), tol);
          if (l.size() != static_cast<std::size_t>(h.rows())) throw DimensionError("L and H have different row counts");
          const auto d = cone::continuous_dual_generator(l, h, tol);
          o.result["R_generator"] = matrix_json(d.r_generator);
          o.result["L_hat"] = matrix_json(d.l_hat.matrix());
          o.result["lambda"] = d.lambda;
          const auto rep = algebra::check_duality_generators(l, d.l_hat, DualityMatrix::from(h), tol);
          Json sg = Json::array();
          for (std::size_t i = 0; i < rep.semigroup_times.size(); ++i) {
            sg.push_back(Json{{"t", rep.semigroup_times[i]}, {"residual", rep.semigroup_residuals[i]}});
          }
          o.result["residuals"] =
              Json{{"duality", d.duality_residual}, {"consistency", d.consistency_residual}, {"semigroup", sg}};
          o.pass = rep.pass;
        }
      } catch (const DimensionError&) {
        throw;
      } catch (const ValidationError& e) {
        o.result["error"] = e.what();
        o.pass = false;
      }
      return o;
    };
  }

  // spectrum
  {
    Command* c = sub("spectrum", "Compare eigenvalue multisets of P and Q");
    c->app->add_option("--p", p_path, "Matrix P");
    c->app->add_option("--q", q_path, "Matrix Q");
    c->required = {"--p", "--q"};
    c->run = [&]() {
      const Tolerances tol = tolerances_from(g);
      const auto r = algebra::spectrum_compare(io::read_matrix(p_path), io::read_matrix(q_path), tol);
      Outcome o;
      Json lhs = Json::array(), rhs = Json::array(), mm = Json::array();
      for (const auto& z : r.lhs) lhs.push_back(complex_json(z));
      for (const auto& z : r.rhs) rhs.push_back(complex_json(z));
      for (const auto& [a, b] : r.mismatches) mm.push_back(Json::array({complex_json(a), complex_json(b)}));
      o.result["eigenvalues_p"] = lhs;
      o.result["eigenvalues_q"] = rhs;
      o.result["max_distance"] = r.max_distance;
      o.result["mismatches"] = mm;
      o.pass = r.pass;
      return o;
    };
  }

  // measure-duality
  std::vector<std::size_t> trap;
  {
    Command* c = sub("measure-duality", "mu(x) P(x,y) = mu(y) Q(y,x), with mu given or read off a diagonal H");
    c->app->add_option("--p", p_path, "Matrix P (may be substochastic)");
    c->app->add_option("--q", q_path, "Matrix Q (may be substochastic)");
    c->app->add_option("--mu", mu_path, "Measure mu as a single row or column");
    c->app->add_option("--h", h_path, "Diagonal duality matrix H (alternative to --mu)");
    c->app->add_option("--trap", trap, "Indices of a set that P must not leave");
    c->required = {"--p", "--q"};
    c->run = [&]() {
      const Tolerances tol = tolerances_from(g);
      if (mu_path.empty() == h_path.empty()) throw UsageError("measure-duality needs exactly one of --mu and --h");
      const Matrix p = io::read_matrix(p_path);
      const Matrix q = io::read_matrix(q_path);
      Vector mu;
      Outcome o;
      if (!mu_path.empty()) {
        mu = read_vector(mu_path);
      } else {
        const auto d = algebra::measure_from_diagonal(DualityMatrix::from(io::read_matrix(h_path)));
        mu = d.mu;
        o.result["support"] = d.support;
      }
      if (p.rows() != mu.size() || q.rows() != mu.size()) throw DimensionError("P, Q and mu have different sizes");
      const double res = algebra::check_measure_duality(p, q, mu);
      o.result["mu"] = vector_json(mu);
      o.result["residual"] = res;
      o.pass = res <= tol.duality;
      if (!trap.empty()) {
        const bool ok = algebra::check_trap(p, trap);
        o.result["trap"] = Json{{"indices", trap}, {"closed", ok}};
        o.pass = o.pass && ok;
      }
      return o;
    };
  }

  // sep-check
  std::size_t sep_sites = 0;
  {
    Command* c = sub("sep-check", "Symmetric exclusion: commutation with Lambda and subset self-duality");
    c->app->add_option("--sites", sep_sites, "Number of sites M (2..10)");
    c->required = {"--sites"};
    c->run = [&]() {
      const Tolerances tol = tolerances_from(g);
      const auto r = algebra::sep_symmetry_check(sep_sites);
      Outcome o;
      o.result["sites"] = sep_sites;
      o.result["commutation_residual"] = r.commutation_residual;
      o.result["self_duality_residual"] = r.self_duality_residual;
      o.pass = r.commutation_residual <= tol.duality && r.self_duality_residual <= tol.duality;
      return o;
    };
  }

  // simulate-ips
  IpsInputs ips;
  std::string trajectory_path;
  std::size_t ex_a = 0, ex_b = 0, grid_points = 5;
  bool exchangeable = false;
  {
    Command* c = sub("simulate-ips", "Simulate a spin system by its graphical representation");
    add_ips_options(c->app, ips);
    c->app->add_option("--trajectory", trajectory_path, "CSV dump of the first forward realization");
    c->app->add_flag("--exchangeable", exchangeable, "Run the exchangeable hypergeometric experiment");
    c->app->add_option("--a", ex_a, "Initial forward count (exchangeable mode)");
    c->app->add_option("--b", ex_b, "Initial dual count (exchangeable mode)");
    c->app->add_option("--grid-points", grid_points, "Number of s-grid points (exchangeable mode)");
    c->required = {"--sites", "--mechanism"};
    c->run = [&]() {
      require_seed(root, "simulate-ips");
      const IpsSetup s = build_ips(ips);
      Outcome o;
      o.uses_seed = true;
      if (exchangeable) {
        if (s.forward.size() != 1 || !ips.rate_tables.empty()) {
          throw UsageError("exchangeable mode needs a single label with a scalar --rate");
        }
        pathsim::ExchangeableConfig cfg;
        cfg.sites = ips.sites;
        cfg.a = ex_a;
        cfg.b = ex_b;
        cfg.q = s.q;
        cfg.mechanisms = {s.forward[0], s.backward[0]};
        cfg.rate = s.rates(0, 0, 1);
        cfg.t = ips.horizon;
        cfg.grid_points = grid_points;
        cfg.replicas = replicas_or(g, 100000);
        cfg.seed = g.seed;
        const auto rep = pathsim::mc_exchangeable_duality(cfg);
        o.result = rep.to_json();
        o.pass = rep.pass;
        return o;
      }
      if (ips.x.empty()) throw UsageError("simulate-ips needs --x (or --exchangeable)");
      const auto x = parse_bits(ips.x, ips.sites, "--x");
      const bool with_dual = !ips.y.empty();
      const auto y = with_dual ? parse_bits(ips.y, ips.sites, "--y") : pathsim::SpinConfiguration(ips.sites);
      if (with_dual) {
        for (std::size_t k = 0; k < s.forward.size(); ++k) {
          if (!pathsim::is_q_dual_mechanism(s.forward[k], s.backward[k], s.q).dual) {
            throw ValidationError("label " + std::to_string(k) + ": mechanisms are not q-dual for q = " + s.q.str());
          }
        }
      }
      const std::size_t reps = replicas_or(g, 1000);
      std::vector<double> counts(reps), lhs(reps), rhs(reps);
      parallel_for(reps, [&](std::size_t r) {
        const auto gf = pathsim::sample_graphical_representation(s.rates, ips.horizon, stream_seed(g.seed, 1, r));
        const auto xt = pathsim::evolve_forward(x, gf, s.forward);
        counts[r] = static_cast<double>(xt.final_state.count());
        if (with_dual) {
          lhs[r] = static_cast<double>(s.q.pow(xt.final_state.meet_count(y)));
          const auto gb = pathsim::sample_graphical_representation(s.rates, ips.horizon, stream_seed(g.seed, 2, r));
          const auto yt = pathsim::evolve_backward(y, gb, s.backward);
          rhs[r] = static_cast<double>(s.q.pow(x.meet_count(yt.final_state)));
        }
      });
      if (!trajectory_path.empty()) {
        const auto g0 = pathsim::sample_graphical_representation(s.rates, ips.horizon, stream_seed(g.seed, 1, 0));
        write_trajectory(trajectory_path, pathsim::evolve_forward(x, g0, s.forward));
      }
      SimulationReport rep;
      rep.experiment = "simulate-ips";
      rep.replicas = reps;
      rep.seed = g.seed;
      rep.estimates.push_back(summarize("count_T", counts));
      if (with_dual) {
        rep.criterion = "|E[H(X_T, y)] - E[H(x, Y_T)]| <= 3 combined SE (independent arrow families)";
        rep.estimates.push_back(summarize("forward_H", lhs));
        rep.estimates.push_back(summarize("backward_H", rhs));
        const double diff = std::abs(rep.estimates[1].mean - rep.estimates[2].mean);
        const double se = std::hypot(rep.estimates[1].se, rep.estimates[2].se);
        rep.details["difference"] = diff;
        rep.details["combined_se"] = se;
        rep.pass = diff <= 3.0 * se;
      } else {
        rep.criterion = "none (forward simulation only)";
        rep.pass = true;
      }
      o.result = rep.to_json();
      o.pass = rep.pass;
      return o;
    };
  }

  // verify-pathwise
  IpsInputs vp;
  std::string vp_trajectory;
  bool all_pairs = false, walk = false;
  long walk_x = 0, walk_y = 0;
  std::size_t walk_steps = 100;
  double mix = -1.0;
  {
    Command* c = sub("verify-pathwise", "Exact strong pathwise duality on sampled graphical representations");
    add_ips_options(c->app, vp);
    c->app->add_option("--trajectory", vp_trajectory, "CSV dump of the first forward realization");
    c->app->add_flag("--all-pairs", all_pairs, "Check every (x, y) pair (N <= 10)");
    c->app->add_option("--mix", mix, "Randomize between the two mechanism pairs, first with probability p");
    c->app->add_flag("--walk", walk, "Absorbed/reflected walk pair instead of a spin system");
    c->app->add_option("--walk-x", walk_x, "Forward walk start");
    c->app->add_option("--walk-y", walk_y, "Backward walk start");
    c->app->add_option("--steps", walk_steps, "Number of walk steps");
    c->run = [&]() {
      require_seed(root, "verify-pathwise");
      Outcome o;
      o.uses_seed = true;
      const std::size_t reps = replicas_or(g, 1);
      if (walk) {
        std::size_t failures = 0;
        Json first = nullptr;
        for (std::size_t r = 0; r < reps; ++r) {
          const auto w = pathsim::rw_siegmund_pathwise(walk_x, walk_y, walk_steps, stream_seed(g.seed, r));
          if (!w.holds) ++failures;
          if (r == 0) first = Json{{"indicator", w.indicator}, {"forward", w.forward}, {"backward", w.backward}};
        }
        o.result["realizations"] = reps;
        o.result["failures"] = failures;
        o.result["first_realization"] = first;
        o.pass = failures == 0;
        return o;
      }
      if (vp.sites == 0) throw UsageError("verify-pathwise needs --sites");
      const IpsSetup s = build_ips(vp);
      std::optional<pathsim::RandomizedMechanism> randomized;
      if (mix >= 0.0) {
        if (s.forward.size() != 2) throw UsageError("--mix needs exactly two mechanism pairs");
        if (s.rates.labels() != 2) throw UsageError("--mix needs two labels");
      }
      std::size_t failures = 0, intervals = 0, pairs = 0, events = 0;
      Json first_failure = nullptr;
      for (std::size_t r = 0; r < reps; ++r) {
        const std::uint64_t rs = stream_seed(g.seed, r);
        pathsim::RateTable rates = s.rates;
        if (mix >= 0.0) {
          // One arrow family at the total rate; the label is drawn per arrow.
          rates = pathsim::RateTable(vp.sites, 1);
          for (std::size_t i = 0; i < vp.sites; ++i) {
            for (std::size_t j = 0; j < vp.sites; ++j) {
              if (i != j) rates.set(0, i, j, s.rates(0, i, j) + s.rates(1, i, j));
            }
          }
        }
        const auto gr = pathsim::sample_graphical_representation(rates, vp.horizon, rs);
        events += gr.size();
        if (r == 0 && !vp_trajectory.empty() && !vp.x.empty() && mix < 0.0) {
          write_trajectory(vp_trajectory, pathsim::evolve_forward(parse_bits(vp.x, vp.sites, "--x"), gr, s.forward));
        }
        if (all_pairs) {
          if (mix >= 0.0) throw UsageError("--all-pairs cannot be combined with --mix");
          const auto a = pathsim::verify_all_pairs(s.q, gr, s.forward, s.backward);
          pairs += a.pairs_checked;
          intervals += a.intervals_checked;
          if (!a.holds) {
            ++failures;
            if (first_failure.is_null()) {
              first_failure = Json{{"realization", r}, {"x", a.failing_pair->first}, {"y", a.failing_pair->second}};
            }
          }
          continue;
        }
        if (vp.x.empty() || vp.y.empty()) throw UsageError("verify-pathwise needs --x and --y, or --all-pairs");
        const auto x = parse_bits(vp.x, vp.sites, "--x");
        const auto y = parse_bits(vp.y, vp.sites, "--y");
        pathsim::PathwiseReport pr;
        if (mix >= 0.0) {
          const pathsim::RandomizedMechanism rm({s.forward[0], s.backward[0]}, {s.forward[1], s.backward[1]}, mix,
                                                stream_seed(rs, 7));
          pr = pathsim::verify_randomized_pathwise(x, y, s.q, gr, rm);
        } else {
          pr = pathsim::verify_strong_pathwise(x, y, s.q, gr, s.forward, s.backward);
        }
        ++pairs;
        intervals += pr.intervals_checked;
        if (!pr.holds) {
          ++failures;
          if (first_failure.is_null()) first_failure = Json{{"realization", r}, {"interval", *pr.first_failure}};
        }
      }
      o.result["realizations"] = reps;
      o.result["events"] = events;
      o.result["pairs_checked"] = pairs;
      o.result["intervals_checked"] = intervals;
      o.result["failures"] = failures;
      o.result["first_failure"] = first_failure;
      o.pass = failures == 0;
      return o;
    };
  }

  // mechanisms
  bool list = false;
  std::vector<std::string> check_pairs;
  std::vector<std::string> monotone_names;
  std::string mech_q = "0";
  {
    Command* c = sub("mechanisms", "Basic mechanism table, q-duality and monotonicity checks");
    c->app->add_flag("--list", list, "Print the mechanism table");
    c->app->add_option("--check", check_pairs, "Mechanism pairs F/G to test for q-duality");
    c->app->add_option("--q", mech_q, "q as p/r or decimal");
    c->app->add_option("--monotone", monotone_names, "Mechanisms to test for monotonicity");
    c->run = [&]() {
      Outcome o;
      o.pass = true;
      if (!list && check_pairs.empty() && monotone_names.empty()) {
        throw UsageError("mechanisms needs --list, --check or --monotone");
      }
      if (list) {
        Json rows = Json::array();
        std::string csv = "mechanism,00,01,10,11\n";
        for (const auto& m : pathsim::standard_mechanisms()) {
          Json row = Json::array();
          csv += m.name;
          for (pathsim::Pair p = 0; p < 4; ++p) {
            row.push_back(pair_string(m(p)));
            csv += "," + pair_string(m(p));
          }
          csv += "\n";
          rows.push_back(Json{{"name", m.name}, {"image", row}});
        }
        o.result["table"] = rows;
        if (check_pairs.empty() && monotone_names.empty()) o.csv = csv;
      }
      if (!check_pairs.empty()) {
        const auto q = pathsim::QParameter::parse(mech_q);
        Json checks = Json::array();
        for (const auto& pair : check_pairs) {
          const auto slash = pair.find('/');
          if (slash == std::string::npos) throw UsageError("--check expects F/G, got '" + pair + "'");
          const auto& f = pathsim::mechanism_by_name(pair.substr(0, slash));
          const auto& gm = pathsim::mechanism_by_name(pair.substr(slash + 1));
          const auto r = pathsim::is_q_dual_mechanism(f, gm, q);
          Json j{{"forward", f.name}, {"backward", gm.name}, {"q", q.str()}, {"dual", r.dual}};
          j["witness"] = r.witness ? Json{{"x", pair_string(r.witness->first)}, {"y", pair_string(r.witness->second)}}
                                   : Json(nullptr);
          checks.push_back(j);
          o.pass = o.pass && r.dual;
        }
        o.result["duality"] = checks;
      }
      if (!monotone_names.empty()) {
        Json mono = Json::array();
        for (const auto& name : monotone_names) {
          const auto& m = pathsim::mechanism_by_name(name);
          const auto r = pathsim::mechanism_monotone(m);
          Json j{{"mechanism", m.name}, {"monotone", r.monotone}};
          j["witness"] = r.witness ? Json{{"x", pair_string(r.witness->first)}, {"y", pair_string(r.witness->second)}}
                                   : Json(nullptr);
          mono.push_back(j);
          o.pass = o.pass && r.monotone;
        }
        o.result["monotonicity"] = mono;
      }
      return o;
    };
  }

  // moment-duality
  scaling::MomentDualityConfig md;
  std::size_t grid_k = 40, n_max = 6;
  {
    Command* c = sub("moment-duality", "Wright-Fisher diffusion against Kingman block counting");
    c->app->add_option("--x0", md.x0, "Initial frequency");
    c->app->add_option("--n0", md.n0, "Initial block count");
    c->app->add_option("--t", md.t, "Time");
    c->app->add_option("--dt", md.dt, "Euler-Maruyama step");
    c->app->add_option("--grid", grid_k, "Grid intervals K for the generator-level check");
    c->app->add_option("--n-max", n_max, "Largest moment in the generator-level check");
    c->run = [&]() {
      require_seed(root, "moment-duality");
      const Tolerances tol = tolerances_from(g);
      Outcome o;
      o.uses_seed = true;
      md.seed = g.seed;
      md.replicas = replicas_or(g, 100000);
      const auto rep = scaling::mc_moment_duality(md);
      o.result = rep.to_json();
      // Generator relation on the grid truncation; the residual is the
      // higher-order part of the central difference.
      if (grid_k < 1 || n_max < 1) throw UsageError("--grid and --n-max must be >= 1");
      const auto lx = algebra::models::wf_grid_generator(grid_k);
      const auto ly = algebra::models::kingman_block_generator(n_max);
      const auto h = algebra::models::moment_matrix(grid_k, n_max);
      const Matrix res = lx.matrix() * h.matrix() - h.matrix() * ly.matrix().transpose();
      double worst = 0.0, largest = 0.0;
      const double step = 1.0 / static_cast<double>(grid_k);
      for (Eigen::Index i = 0; i < res.rows(); ++i) {
        for (Eigen::Index j = 0; j < res.cols(); ++j) {
          const double e = algebra::models::wf_grid_truncation_error(static_cast<double>(i) * step,
                                                                     static_cast<std::size_t>(j + 1), step);
          worst = std::max(worst, std::abs(res(i, j) - e));
          largest = std::max(largest, std::abs(res(i, j)));
        }
      }
      o.result["generator_check"] = Json{{"grid_intervals", grid_k},
                                         {"n_max", n_max},
                                         {"max_residual", largest},
                                         {"max_deviation_from_truncation_error", worst}};
      o.pass = rep.pass && worst <= tol.duality;
      return o;
    };
  }

  // rescale-experiment
  scaling::RescalingConfig rc;
  {
    Command* c = sub("rescale-experiment", "Finite-N duality and convergence to the diffusion limit");
    c->app->add_option("--n-list", rc.n_list, "Population sizes");
    c->app->add_option("--q", rc.q, "q (only -1 is supported by the mechanism pairs)");
    c->app->add_option("--alpha", rc.r_schedule.coefficient, "r_N = alpha N^r_exponent");
    c->app->add_option("--r-exponent", rc.r_schedule.exponent, "Exponent of the r_N schedule");
    c->app->add_option("--beta", rc.b_schedule.coefficient, "b_N = beta N^b_exponent");
    c->app->add_option("--b-exponent", rc.b_schedule.exponent, "Exponent of the b_N schedule");
    c->app->add_option("--x0", rc.x0, "Initial fraction, k0 = round(x0 N)");
    c->app->add_option("--n0", rc.n0, "Initial dual count");
    c->app->add_option("--t", rc.t, "Time (constant t_N)");
    c->app->add_option("--dt", rc.dt, "Euler-Maruyama step");
    c->app->add_option("--cap", rc.cap, "Population cap of the branching-annihilating dual");
    c->run = [&]() {
      require_seed(root, "rescale-experiment");
      Outcome o;
      o.uses_seed = true;
      rc.seed = g.seed;
      rc.replicas = replicas_or(g, 20000);
      const auto res = scaling::rescaling_experiment(rc);
      o.result = res.report.to_json();
      o.pass = res.report.pass;
      o.csv = res.table_csv();
      return o;
    };
  }

  // Parse.
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    root.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << root.help();
    return kPass;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  Command* cmd = nullptr;
  std::string cmd_name;
  for (auto& [name, c] : commands) {
    if (c.app->parsed()) {
      cmd = &c;
      cmd_name = name;
    }
  }
  if (cmd == nullptr) {
    err << "error: no subcommand\n";
    return kUsage;
  }
  if (cmd->app->get_subcommands().size() > 0) {
    err << "error: nested subcommands are not supported\n";
    return kUsage;
  }

  Outcome outcome;
  Json config_echo = Json::object();
  try {
    // Config file: command-line values win over config values.
    if (!g.config.empty()) {
      std::ifstream f(g.config);
      if (!f) throw UsageError("cannot open config '" + g.config + "'");
      Json cfg;
      try {
        cfg = Json::parse(f);
      } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(g.config + ": " + e.what());
      }
      if (!cfg.is_object()) throw UsageError(g.config + ": top level must be an object");
      for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        std::string key = it.key();
        if (key == "command") {
          if (!it.value().is_string() || it.value().get<std::string>() != cmd_name) {
            throw UsageError(g.config + ": config is for command '" + it.value().dump() + "', not '" + cmd_name + "'");
          }
          continue;
        }
        std::replace(key.begin(), key.end(), '_', '-');
        if (key == "mechanisms") key = "mechanism";
        if (key == "rates") key = it.value().is_string() || (it.value().is_array() && !it.value().empty() && it.value()[0].is_string()) ? "rate-table" : "rate";
        CLI::Option* opt = nullptr;
        for (CLI::App* a : {cmd->app, &root}) {
          for (CLI::Option* candidate : a->get_options()) {
            if (candidate->get_name().empty() || candidate->check_name("--help") || candidate->check_name("--config")) {
              continue;
            }
            if (candidate->check_name("--" + key) || (key.size() == 1 && candidate->check_name("-" + key))) {
              opt = candidate;
              break;
            }
          }
          if (opt != nullptr) break;
        }
        if (opt == nullptr) throw UsageError(g.config + ": unknown key '" + it.key() + "' for " + cmd_name);
        if (opt->count() > 0) continue;
        std::vector<std::string> values;
        auto scalar = [&](const Json& v) -> std::string {
          if (v.is_string()) return v.get<std::string>();
          if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
          if (v.is_number_float()) return format_double(v.get<double>());
          if (v.is_number()) return v.dump();
          if (v.is_object() && key == "mechanism") {
            if (!v.contains("forward") || !v.contains("backward")) {
              throw UsageError(g.config + ": each mechanism needs 'forward' and 'backward'");
            }
            for (auto k = v.begin(); k != v.end(); ++k) {
              if (k.key() != "label" && k.key() != "forward" && k.key() != "backward") {
                throw UsageError(g.config + ": unknown mechanism key '" + k.key() + "'");
              }
            }
            return v["forward"].get<std::string>() + "/" + v["backward"].get<std::string>();
          }
          throw UsageError(g.config + ": unsupported value for key '" + it.key() + "'");
        };
        if (it.value().is_array()) {
          Json arr = it.value();
          if (key == "mechanism") {
            // Order by label when labels are given.
            std::stable_sort(arr.begin(), arr.end(), [](const Json& a, const Json& b) {
              return a.value("label", 0) < b.value("label", 0);
            });
            for (std::size_t i = 0; i < arr.size(); ++i) {
              if (arr[i].is_object() && arr[i].contains("label") && arr[i]["label"].get<std::size_t>() != i) {
                throw UsageError(g.config + ": mechanism labels must be 0..K-1");
              }
            }
          }
          for (const auto& v : arr) values.push_back(scalar(v));
        } else {
          values.push_back(scalar(it.value()));
        }
        if (opt->get_items_expected_max() == 0) {
          // Flags: only true/false.
          if (values.size() != 1 || (values[0] != "true" && values[0] != "false")) {
            throw UsageError(g.config + ": key '" + it.key() + "' expects a boolean");
          }
          if (values[0] == "false") continue;
        }
        try {
          for (auto& v : values) opt->add_result(v);
          opt->run_callback();
        } catch (const CLI::ParseError& e) {
          throw UsageError(g.config + ": key '" + it.key() + "': " + e.what());
        }
      }
    }
    for (const auto& name : cmd->required) {
      if (cmd->app->get_option(name)->count() == 0) throw UsageError(cmd_name + ": " + name + " is required");
    }
    if (!(g.tol_duality > 0.0) || !(g.tol_row > 0.0)) throw UsageError("tolerances must be positive");

    for (CLI::App* a : {&root, cmd->app}) {
      for (CLI::Option* opt : a->get_options()) {
        if (opt->get_name().empty() || opt->check_name("--help") || opt->check_name("--version")) continue;
        std::string key = opt->get_name(false, false);
        const auto& lnames = opt->get_lnames();
        if (!lnames.empty()) key = lnames.front();
        const auto& res = opt->results();
        if (res.empty()) {
          if (opt->get_items_expected_max() == 0) {
            config_echo[key] = false;
          } else {
            const std::string d = opt->get_default_str();
            config_echo[key] = d.empty() ? Json(nullptr) : Json(d);
          }
        } else if (opt->get_items_expected_max() == 0) {
          config_echo[key] = true;
        } else if (res.size() == 1 && opt->get_items_expected_max() <= 1) {
          config_echo[key] = res[0];
        } else {
          config_echo[key] = res;
        }
      }
    }

    outcome = cmd->run();
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << cmd_name << ": " << e.what() << "\n";
    return kUsage;
  }

  Json report;
  report["tool"] = kToolName;
  report["version"] = kVersion;
  report["command"] = cmd_name;
  report["config"] = config_echo;
  report["seed"] = outcome.uses_seed ? Json(g.seed) : Json(nullptr);
  report["tolerances"] = tolerances_json(tolerances_from(g));
  report["result"] = outcome.result;
  report["pass"] = outcome.pass;

  std::string text;
  if (g.format == "json") {
    text = dump_json(report);
  } else if (outcome.csv) {
    text = *outcome.csv;
  } else {
    text = flatten_csv(report);
  }
  if (g.out.empty()) {
    out << text;
    out.flush();
  } else {
    std::ofstream f(g.out, std::ios::binary);
    if (!f) {
      err << "error: cannot open '" << g.out << "' for writing\n";
      return kUsage;
    }
    f << text;
    f.flush();
    if (!f) {
      err << "error: failed writing '" << g.out << "'\n";
      return kUsage;
    }
  }
  return outcome.pass ? kPass : kFail;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace duality::cli
