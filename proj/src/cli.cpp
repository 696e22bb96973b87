#include "tightchains/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "tightchains/asymptotics.hpp"
#include "tightchains/chains.hpp"
#include "tightchains/compositions.hpp"
#include "tightchains/errors.hpp"
#include "tightchains/hitting.hpp"
#include "tightchains/series.hpp"

namespace tc::cli {

namespace {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Report {
  std::string name;
  bool table = false;  // false: a single row of scalars
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void scalar(const std::string& key, Cell value) {
    columns.push_back(key);
    if (rows.empty()) rows.emplace_back();
    rows[0].push_back(std::move(value));
  }
};

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string cell_text(const Cell& c) {
  if (auto p = std::get_if<std::int64_t>(&c)) return std::to_string(*p);
  if (auto p = std::get_if<double>(&c)) return format_number(*p);
  return std::get<std::string>(c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
  if (auto p = std::get_if<std::int64_t>(&c)) return *p;
  if (auto p = std::get_if<double>(&c)) {
    if (!std::isfinite(*p)) return format_number(*p);
    return std::strtod(format_number(*p).c_str(), nullptr);
  }
  return std::get<std::string>(c);
}

void write_csv(const Report& r, std::ostream& os) {
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << '\n';
  }
}

void write_json(const Report& r, std::ostream& os) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (!r.table) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
      j[r.columns[i]] = r.rows.empty() ? nullptr : cell_json(r.rows[0][i]);
    }
  } else {
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
      nlohmann::ordered_json col = nlohmann::ordered_json::array();
      for (const auto& row : r.rows) col.push_back(cell_json(row[i]));
      j[r.columns[i]] = std::move(col);
    }
  }
  os << j.dump(2) << '\n';
}

struct Common {
  std::string model = "cca";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool unsafe = false;
  bool timing = false;
  std::string out;
  std::string format;
  int enumerate_max_nu = 20;
  int exact_max_nu = 300;
  std::uint64_t step_cap = 1'000'000'000ULL;

  Guards guards() const {
    Guards g;
    if (!unsafe && (enumerate_max_nu > g.enumerate_max_nu || exact_max_nu > g.exact_max_nu ||
                    step_cap > g.step_cap)) {
      throw DomainError("raising a guard above its default requires --unsafe");
    }
    g.enumerate_max_nu = enumerate_max_nu;
    g.exact_max_nu = exact_max_nu;
    g.step_cap = step_cap;
    g.unsafe = unsafe;
    return g;
  }
  Model parsed_model() const { return parse_model(model); }
  std::uint64_t required_seed(const std::string& cmd) const {
    if (!seed) throw DomainError(cmd + ": --seed is required");
    return *seed;
  }
};

struct Params {
  int nu = 10;
  int reps = 0;
  int mu = 1;
  int k = 1;
  int K = 200;
  std::int64_t n = 8;
  std::int64_t i = 1;
  std::int64_t length = 100;
  std::string start = "initial";
  std::vector<double> s_values;
  std::vector<double> m_values;
};

Report cmd_constants(const Common& c) {
  Model model = c.parsed_model();
  const ModelConstants& k = constants(model);
  Report r;
  r.name = "constants";
  r.scalar("model", std::string(to_string(model)));
  r.scalar("z_star", k.z_star);
  double h0 = model == Model::Cca ? cca_h(1.0, k.z_star) : carlitz_h(1.0, k.z_star).value;
  r.scalar("z_star_residual", std::abs(h0));
  r.scalar("a", k.a);
  r.scalar("A", k.A);
  r.scalar("alpha", k.alpha);
  r.scalar("beta", k.beta);
  double mu1 = -k.z1 / k.z_star;
  r.scalar("beta_numeric", mu1 + mu1 * mu1 - z_second_derivative_numeric(model) / k.z_star);
  r.scalar("B", k.B);
  r.scalar("C", k.C);
  r.scalar("gamma", k.gamma);
  r.scalar("z_prime_1", k.z1);
  r.scalar("z_second_1", k.z2);
  return r;
}

Report cmd_count(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  Guards g = c.guards();
  if (p.nu < 1) throw DomainError("count: --nu must be >= 1");
  if (p.nu > g.exact_max_nu && !g.unsafe) {
    throw ResourceError("count: exact counting is capped at nu <= " + std::to_string(g.exact_max_nu));
  }
  SeriesExpansion s = counting_series(model, p.nu);
  double z = constants(model).z_star;
  Report r;
  r.name = "count";
  r.table = true;
  r.columns = {"nu", "count", "scaled_count"};
  for (int nu = 1; nu <= p.nu; ++nu) {
    const BigInt& t = s.coefficients[nu];
    double scaled = static_cast<double>(HighReal(t) * pow(HighReal(z), nu));
    r.rows.push_back({static_cast<std::int64_t>(nu), t.str(), scaled});
  }
  return r;
}

std::string join_parts(const std::vector<int>& parts) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(parts[i]);
  }
  return s;
}

Report cmd_sample(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  std::uint64_t seed = c.required_seed("sample");
  if (p.reps < 0) throw DomainError("sample: --reps must be >= 0");
  Report r;
  r.name = "sample";
  r.table = true;
  r.columns = {"rep", "num_parts", "largest", "parts"};
  if (p.reps == 0) return r;
  Guards g = c.guards();
  CompletionTable table = CompletionTable::build(
      model, p.nu, p.nu <= g.exact_max_nu ? TableMode::Exact : TableMode::Scaled, g);
  for (int rep = 0; rep < p.reps; ++rep) {
    SplitMix64 rng(seed, static_cast<std::uint64_t>(rep));
    Composition comp = sample(table, rng);
    int largest = 0;
    for (int v : comp.parts) largest = std::max(largest, v);
    r.rows.push_back({static_cast<std::int64_t>(rep),
                      static_cast<std::int64_t>(comp.parts.size()),
                      static_cast<std::int64_t>(largest), join_parts(comp.parts)});
  }
  return r;
}

DistributionOnN start_law(Model model, const std::string& start) {
  if (start == "initial") return initial_distribution(model, 400);
  if (start == "stationary") return stationary_distribution(model, 400);
  try {
    std::size_t used = 0;
    int k = std::stoi(start, &used);
    if (used == start.size() && k >= 1) return DistributionOnN::point(k);
  } catch (const std::exception&) {
  }
  throw DomainError("--start must be initial, stationary or a positive integer");
}

Report cmd_chain_sim(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  std::uint64_t seed = c.required_seed("chain-sim");
  Guards g = c.guards();
  if (p.length < 0) throw DomainError("chain-sim: --length must be >= 0");
  if (static_cast<std::uint64_t>(p.length) > g.step_cap && !g.unsafe) {
    throw ResourceError("chain-sim: --length exceeds the step cap");
  }
  SplitMix64 rng(seed, 0);
  Path path = simulate_path(model, start_law(model, p.start), p.length, rng);
  Report r;
  r.name = "chain-sim";
  r.table = true;
  r.columns = {"t", "state"};
  r.rows.push_back({std::int64_t{0}, static_cast<std::int64_t>(path.start)});
  for (std::size_t t = 0; t < path.states.size(); ++t) {
    r.rows.push_back({static_cast<std::int64_t>(t + 1), static_cast<std::int64_t>(path.states[t])});
  }
  return r;
}

Report cmd_hit(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  if (p.n < 1 || p.K <= p.n + 1) throw DomainError("hit: need n >= 1 and K > n + 1");
  if (p.i < 1) throw DomainError("hit: --i must be >= 1");
  if (p.reps < 0) throw DomainError("hit: --reps must be >= 0");
  TruncatedChain chain = truncate(model, p.K);
  RareSet S = RareSet::upper(p.n);
  HitSolution hits = expected_hits(chain, S);
  MixingDiagnostics mix = mixing_diagnostics(model, 60);
  PerronData pd = perron(chain, S, mix.delta0);
  JointLaw law = exact_hit_law(chain, S, p.i);
  JointLaw prod = product_law(chain, S);
  TvResult d = tv(law, prod);
  double piS = S.stationary_mass(model);
  double pS = sup_row_tail(model, p.n);
  Report r;
  r.name = "hit";
  r.scalar("model", std::string(to_string(model)));
  r.scalar("n", p.n);
  r.scalar("K", static_cast<std::int64_t>(p.K));
  r.scalar("i", p.i);
  r.scalar("pi_S", piS);
  r.scalar("p_S", pS);
  r.scalar("pi_tail_K", chain.pi_tail);
  r.scalar("expected_hit", hits.at(p.i, S));
  r.scalar("expected_hit_scaled", hits.at(p.i, S) * piS);
  r.scalar("solver_residual", hits.residual);
  r.scalar("solver_leak", hits.leak);
  r.scalar("kac_sum", kac_sum(chain, S, hits));
  r.scalar("one_minus_lambda", pd.one_minus_lambda);
  r.scalar("one_minus_lambda_lower", pd.cw_lower);
  r.scalar("one_minus_lambda_upper", pd.cw_upper);
  r.scalar("perron_ratio", pd.one_minus_lambda / piS);
  r.scalar("perron_residual", pd.residual);
  r.scalar("delta0", mix.delta0);
  r.scalar("tv_hit_vs_product", d.value);
  r.scalar("tv_hit_vs_product_lower", d.lower);
  r.scalar("tv_over_p_S", d.value / pS);
  r.scalar("hit_law_unaccounted", law.unaccounted);
  if (p.reps > 0) {
    std::uint64_t seed = c.required_seed("hit");
    Guards g = c.guards();
    RowSampler sampler(model);
    DistributionOnN init = DistributionOnN::point(static_cast<int>(p.i));
    double sum = 0, sum2 = 0;
    for (int rep = 0; rep < p.reps; ++rep) {
      SplitMix64 rng(seed, static_cast<std::uint64_t>(rep));
      auto rec = simulate_hits(sampler, init, S, 1, rng, g.unsafe ? ~0ULL : g.step_cap);
      double t = static_cast<double>(rec[0].gap);
      sum += t;
      sum2 += t * t;
    }
    double mean = sum / p.reps;
    double var = p.reps > 1 ? (sum2 - p.reps * mean * mean) / (p.reps - 1) : 0.0;
    r.scalar("reps", static_cast<std::int64_t>(p.reps));
    r.scalar("empirical_hit", mean);
    r.scalar("empirical_hit_sigma", std::sqrt(std::max(var, 0.0) / p.reps));
  }
  return r;
}

Report cmd_extremes(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  std::uint64_t seed = c.required_seed("extremes");
  if (p.reps < 1) throw DomainError("extremes: --reps must be >= 1");
  if (p.mu < 1) throw DomainError("extremes: --mu must be >= 1");
  EmpiricalExtremes e = empirical_extremes(model, p.nu, p.mu, p.reps, seed, c.jobs, c.guards());
  std::vector<double> svals = p.s_values.empty() ? std::vector<double>{0.5, 1, 2} : p.s_values;
  double z = constants(model).z_star;
  double lnN = std::log(static_cast<double>(e.N0));
  Report r;
  r.name = "extremes";
  r.table = true;
  r.columns = {"rank",         "s",           "empirical_tail", "sigma",
               "erlang_tail",  "bracket_lower", "bracket_upper", "median_part",
               "centering",    "median_gap",  "gap_prediction"};
  for (int rank = 1; rank <= p.mu; ++rank) {
    for (double s : svals) {
      double band = 3 * e.w_tail_sigma(rank, s) + (s + rank) / lnN;
      r.rows.push_back({static_cast<std::int64_t>(rank), s, e.w_tail(rank, s),
                        e.w_tail_sigma(rank, s), gamma_tail(rank, s),
                        gamma_tail(rank, s / z) - band, gamma_tail(rank, s) + band,
                        e.median_part(rank), extreme_centering(model, p.nu, rank),
                        e.median_gap(rank), extreme_gap(model, rank)});
    }
  }
  return r;
}

Report cmd_compare_prefix(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  PrefixTvReport t = prefix_tv(model, p.nu, p.k, c.guards());
  Report r;
  r.name = "compare-prefix";
  r.scalar("model", std::string(to_string(model)));
  r.scalar("nu", static_cast<std::int64_t>(p.nu));
  r.scalar("k", static_cast<std::int64_t>(p.k));
  r.scalar("threshold", t.threshold);
  r.scalar("tv", t.tv);
  r.scalar("overflow_composition", t.overflow_composition);
  r.scalar("overflow_chain", t.overflow_chain);
  r.scalar("prefixes", static_cast<std::int64_t>(t.prefixes));
  r.scalar("max_log_ratio_from_5", t.max_log_ratio_from(5));
  r.scalar("max_log_ratio_from_10", t.max_log_ratio_from(10));
  return r;
}

Report cmd_ldp(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  Guards g = c.guards();
  const ModelConstants& k = constants(model);
  std::vector<double> ms = p.m_values;
  if (ms.empty()) {
    // Steps of one standard deviation, shrunk so the grid stays in the window.
    const double eps = validity_window();
    auto edge = [&](double w) { return -(p.nu + 1.0) * w * z_prime_of_w(model, w) / z_of_w(model, w); };
    const double center = k.alpha * p.nu;
    const double room = std::min(edge(1 + 0.95 * eps) - center, center - edge(1 - 0.95 * eps));
    const double step = std::min(std::sqrt(k.beta * p.nu), room / 4);
    for (int j = -4; j <= 4; ++j) ms.push_back(center + j * step);
  }
  Report r;
  r.name = "ldp";
  r.table = true;
  r.columns = {"m", "side", "w_bar", "z_bar", "exponent", "saddle_bound", "rigorous", "gaussian"};
  for (double m : ms) {
    Side side = m >= k.alpha * p.nu ? Side::Upper : Side::Lower;
    LdpBound b = ldp_bound(model, p.nu, m, side, g);
    r.rows.push_back({m, std::string(side == Side::Upper ? "upper" : "lower"), b.saddle.w_bar,
                      b.saddle.z_bar, b.saddle.exponent, b.saddle_bound, b.rigorous, b.gaussian});
  }
  return r;
}

Report cmd_clt(const Common& c, const Params& p) {
  Model model = c.parsed_model();
  std::uint64_t seed = c.required_seed("clt");
  CltReport t = clt_check(model, p.nu, p.reps, seed, c.jobs, c.guards());
  const ModelConstants& k = constants(model);
  Report r;
  r.name = "clt";
  r.scalar("model", std::string(to_string(model)));
  r.scalar("nu", static_cast<std::int64_t>(p.nu));
  r.scalar("exact", std::int64_t{t.exact ? 1 : 0});
  r.scalar("reps", static_cast<std::int64_t>(t.reps));
  r.scalar("seed", static_cast<std::int64_t>(seed));
  r.scalar("alpha", k.alpha);
  r.scalar("beta", k.beta);
  r.scalar("mean", t.mean);
  r.scalar("mean_sigma", t.mean_sigma);
  r.scalar("variance", t.variance);
  r.scalar("mean_over_nu", t.mean_over_nu);
  r.scalar("variance_over_nu", t.variance_over_nu);
  r.scalar("standardized_mean", t.standardized_mean);
  r.scalar("standardized_variance", t.standardized_variance);
  r.scalar("skewness", t.skewness);
  return r;
}

void add_common(CLI::App* sub, Common& c, bool stochastic) {
  sub->add_option("--model", c.model, "cca or carlitz")
      ->check(CLI::IsMember({"cca", "carlitz"}, CLI::ignore_case));
  if (stochastic) {
    sub->add_option("--seed", c.seed, "RNG seed (required)");
    sub->add_option("--jobs", c.jobs, "threads for Monte Carlo replicas")->check(CLI::Range(1, 256));
  }
  sub->add_flag("--unsafe", c.unsafe, "lift the resource guards");
  sub->add_flag("--timing", c.timing, "print wall time to stderr");
  sub->add_option("--out", c.out, "output file");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--enumerate-max-nu", c.enumerate_max_nu);
  sub->add_option("--exact-max-nu", c.exact_max_nu);
  sub->add_option("--step-cap", c.step_cap);
}

std::filesystem::path output_path(const Common& c, const std::string& name, const std::string& ext) {
  const char* dir = std::getenv("TIGHTCHAINS_OUTPUT_DIR");
  std::filesystem::path base = dir && *dir ? std::filesystem::path(dir) : std::filesystem::path();
  if (!c.out.empty()) {
    std::filesystem::path o(c.out);
    return o.is_absolute() || base.empty() ? o : base / o;
  }
  if (base.empty()) return {};
  return base / (name + "." + ext);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tight Markov chains and constrained compositions"};
  app.require_subcommand(1);
  Common c;
  Params p;

  auto* constants_cmd = app.add_subcommand("constants", "model constants (JSON)");
  add_common(constants_cmd, c, false);

  auto* count_cmd = app.add_subcommand("count", "exact counts T(1..nu) (CSV)");
  add_common(count_cmd, c, false);
  count_cmd->add_option("--nu", p.nu)->required();

  auto* sample_cmd = app.add_subcommand("sample", "uniform (weighted) random compositions (CSV)");
  add_common(sample_cmd, c, true);
  sample_cmd->add_option("--nu", p.nu)->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--reps", p.reps)->required();

  auto* chain_cmd = app.add_subcommand("chain-sim", "simulate the limiting chain (CSV)");
  add_common(chain_cmd, c, true);
  chain_cmd->add_option("--length", p.length)->required();
  chain_cmd->add_option("--start", p.start, "initial, stationary or a state");

  auto* hit_cmd = app.add_subcommand("hit", "hitting analysis of S_n = {n+1, ...} (JSON)");
  add_common(hit_cmd, c, true);
  hit_cmd->add_option("--n", p.n)->required();
  hit_cmd->add_option("--K", p.K, "truncation level");
  hit_cmd->add_option("--i", p.i, "initial state");
  hit_cmd->add_option("--reps", p.reps, "simulated first hits");

  auto* ext_cmd = app.add_subcommand("extremes", "largest parts of random compositions (CSV)");
  add_common(ext_cmd, c, true);
  ext_cmd->add_option("--nu", p.nu)->required()->check(CLI::Range(2, 10'000'000));
  ext_cmd->add_option("--mu", p.mu);
  ext_cmd->add_option("--reps", p.reps)->required();
  ext_cmd->add_option("--s", p.s_values, "W thresholds");

  auto* prefix_cmd = app.add_subcommand("compare-prefix", "prefix law vs chain (JSON)");
  add_common(prefix_cmd, c, false);
  prefix_cmd->add_option("--nu", p.nu)->required()->check(CLI::Range(2, 100000));
  prefix_cmd->add_option("--k", p.k)->check(CLI::Range(1, 8));

  auto* ldp_cmd = app.add_subcommand("ldp", "Chernoff bounds on the number of parts (CSV)");
  add_common(ldp_cmd, c, false);
  ldp_cmd->add_option("--nu", p.nu)->required()->check(CLI::Range(2, 100'000'000));
  ldp_cmd->add_option("--m", p.m_values, "parts counts");

  auto* clt_cmd = app.add_subcommand("clt", "mean and variance of the number of parts (JSON)");
  add_common(clt_cmd, c, true);
  clt_cmd->add_option("--nu", p.nu)->required()->check(CLI::Range(1, 10'000'000));
  clt_cmd->add_option("--reps", p.reps);

  std::vector<const char*> argv{"tightchains"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  auto t0 = std::chrono::steady_clock::now();
  try {
    Report r;
    std::string fmt = "json";
    if (*constants_cmd) {
      r = cmd_constants(c);
    } else if (*count_cmd) {
      r = cmd_count(c, p);
      fmt = "csv";
    } else if (*sample_cmd) {
      r = cmd_sample(c, p);
      fmt = "csv";
    } else if (*chain_cmd) {
      r = cmd_chain_sim(c, p);
      fmt = "csv";
    } else if (*hit_cmd) {
      r = cmd_hit(c, p);
    } else if (*ext_cmd) {
      r = cmd_extremes(c, p);
      fmt = "csv";
    } else if (*prefix_cmd) {
      r = cmd_compare_prefix(c, p);
    } else if (*ldp_cmd) {
      r = cmd_ldp(c, p);
      fmt = "csv";
      err << "note: saddle_bound and gaussian take the unspecified absolute constant c = 1\n";
    } else {
      r = cmd_clt(c, p);
    }
    if (!c.format.empty()) fmt = c.format;
    std::ostringstream body;
    if (fmt == "csv") {
      write_csv(r, body);
    } else {
      write_json(r, body);
    }
    std::filesystem::path path = output_path(c, r.name, fmt);
    if (path.empty()) {
      out << body.str();
    } else {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw DomainError("cannot open output file " + path.string());
      f << body.str();
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const BracketError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ResourceError& e) {
    err << "resource guard: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 1;
  }
  if (c.timing) {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    err << "wall_time_s=" << format_number(secs) << '\n';
  }
  return 0;
}

}  // namespace tc::cli
