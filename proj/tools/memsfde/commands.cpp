#include "commands.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace memsfde::cli {

namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> header(const RunConfig& cfg) {
  std::vector<std::string> m{
      fmt::format("command={}", to_string(cfg.command)),
      fmt::format("seed={}", cfg.simulation.seed),
      fmt::format("stream={}", cfg.stream),
      "config_hash=" + config_hash(cfg),
      fmt::format("generator={}", Philox4x32::name()),
  };
  for (auto& line : describe(cfg)) m.push_back("config." + line);
  return m;
}

/// Keeps only the samples up to and including t.
PathRecord truncate(const PathRecord& path, double t) {
  const std::size_t at = path.grid.index_of(t);
  PathRecord out = path;
  out.grid = TimeGrid(path.grid.start(), path.grid.step(), at);
  out.prices.resize(at + 1);
  if (out.increments.size() > at) out.increments.resize(at);
  return out;
}

/// The extended initial path as a record ending at t = 0.
PathRecord history_record(const InitialPath& theta, const RunConfig& cfg) {
  const InitialPath hat = extend_initial(theta, cfg.simulation.gap);
  const auto& v = hat.values();
  TimeGrid grid(-hat.extension() - hat.window(), hat.step(), v.size() - 1);
  return PathRecord{grid, std::vector<double>(v.begin(), v.end()), {}, cfg.simulation.measure, cfg.simulation.gap,
                    cfg.simulation.window};
}

std::optional<double> constant_vol(const FunctionalSpec& g) {
  if (const auto* c = std::get_if<FunctionalSpec::Constant>(&g.kind())) return c->value;
  return std::nullopt;
}

Artifacts run_simulate(const RunConfig& cfg, const InitialPath& theta) {
  const PathRecord path = simulate_gap_path(theta, cfg.drift, cfg.vol, cfg.simulation, cfg.stream);
  std::string csv = "t,price\n";
  for (std::size_t i = 0; i < path.prices.size(); ++i) {
    csv += num(path.grid.time(i)) + "," + num(path.prices[i]) + "\n";
  }
  auto m = header(cfg);
  m.push_back(fmt::format("result.nodes={}", path.prices.size()));
  m.push_back("result.terminal_price=" + num(path.prices.back()));
  return {csv, m};
}

PricingResult price_with(const RunConfig& cfg, const InitialPath& theta, std::string& method) {
  const auto& p = cfg.price;
  const auto& s = cfg.simulation;
  const auto& mkt = cfg.market;
  const double t = p.time;
  const auto sigma = constant_vol(cfg.vol);

  std::optional<PathRecord> prefix;
  if (!p.path_file.empty()) {
    std::ifstream in(p.path_file);
    if (!in) throw ValidationError("cannot open path file '" + p.path_file + "'");
    prefix = truncate(load_path_csv(in, s.dt, s.gap, s.window), t);
  } else {
    prefix = history_record(theta, cfg);
  }

  const bool last_delay = t >= mkt.maturity - s.gap - kDivisibilityTol * s.dt;
  if (method == "auto") method = last_delay || sigma ? "closed_form" : "nested";

  if (method == "closed_form") {
    if (sigma) {
      const double tau = mkt.maturity - t;
      return closed_form_last_delay(value_at(*prefix, t), *sigma * *sigma * tau, tau, mkt);
    }
    if (!last_delay) throw ValidationError("closed_form needs t >= T - l or a constant vol");
    return price_last_delay(*prefix, t, cfg.vol, mkt, s.gap);
  }
  if (method == "nested") {
    if (last_delay) throw ValidationError("nested pricing needs t < T - l; use closed_form");
    if (t > 0.0) return price_nested(*prefix, t, cfg.drift, cfg.vol, s, mkt);
    return price_nested(theta, cfg.drift, cfg.vol, s, mkt);
  }
  if (method == "gap_mc") return price_gap_mc(theta, cfg.drift, cfg.vol, s, mkt, p.payoff);
  if (method == "full_memory_mc") return price_full_memory_mc(p.approx_k, theta, cfg.drift, cfg.vol, s, mkt, p.payoff);
  if (method == "black_scholes") {
    if (!sigma) throw ValidationError("black_scholes needs a constant vol");
    auto r = PricingResult::exact(black_scholes(theta.present(), mkt.strike, mkt.rate, *sigma, mkt.maturity),
                                  Method::black_scholes);
    return r;
  }
  throw ValidationError("unknown pricing method '" + method + "'");
}

Artifacts run_price(const RunConfig& cfg, const InitialPath& theta) {
  std::string method = cfg.price.method;
  const PricingResult r = price_with(cfg, theta, method);
  std::string csv = "method,price,std_error,ci_lo,ci_hi,replicates,seed\n";
  csv += fmt::format("{},{},{},{},{},{},{}\n", to_string(r.method), num(r.price), num(r.std_error), num(r.ci_lo),
                     num(r.ci_hi), r.replicates, cfg.simulation.seed);
  auto m = header(cfg);
  m.push_back(fmt::format("result.method={}", to_string(r.method)));
  m.push_back("result.price=" + num(r.price));
  m.push_back("result.std_error=" + num(r.std_error));
  m.push_back(fmt::format("result.degenerate={}", r.degenerate));
  if (r.hedge) {
    m.push_back("result.hedge_stock_units=" + num(r.hedge->stock_units));
    m.push_back("result.hedge_bond_units=" + num(r.hedge->bond_units));
  }
  return {csv, m};
}

Artifacts run_converge(const RunConfig& cfg, const InitialPath& theta) {
  const auto rep = convergence_study(cfg.converge.k_values, cfg.converge.beta, theta, cfg.drift, cfg.vol,
                                     cfg.simulation);
  std::string csv = "k,discrepancy,std_error,ci_lo,ci_hi\n";
  for (std::size_t i = 0; i < rep.k_values.size(); ++i) {
    const auto& e = rep.discrepancies[i];
    csv += fmt::format("{},{},{},{},{}\n", rep.k_values[i], num(e.mean), num(e.std_error), num(e.ci_lo()),
                       num(e.ci_hi()));
  }
  auto m = header(cfg);
  m.push_back("result.fitted_slope=" + num(rep.fitted_slope));
  m.push_back("result.theoretical_slope=" + num(rep.theoretical_slope));
  m.push_back("result.slope_tolerance=" + num(rep.slope_tolerance));
  m.push_back(fmt::format("result.degenerate={}", rep.degenerate));
  m.push_back(fmt::format("result.monotone={}", rep.monotone));
  m.push_back(fmt::format("result.pass={}", rep.pass()));
  return {csv, m};
}

Artifacts run_hedge(const RunConfig& cfg, const InitialPath& theta) {
  const auto& s = cfg.simulation;
  std::vector<double> hs = cfg.hedge.rebalance_dt;
  if (hs.empty()) hs = {s.gap / 4.0, s.gap / 8.0};
  const std::size_t n = s.replicates;
  std::vector<std::vector<double>> errors(hs.size(), std::vector<double>(n));
  const GapScheme scheme(theta, cfg.drift, cfg.vol, s, s.gap, s.gap);
  parallel_for(
      n, s.threads, [] { return Trajectory{}; },
      [&](Trajectory& tr, std::size_t i) {
        scheme.prepare(tr);
        draw_increments(tr, s, i);
        scheme.run(tr, s.measure, s.rate);
        const PathRecord path = to_record(scheme, tr, s.measure);
        for (std::size_t j = 0; j < hs.size(); ++j) {
          errors[j][i] = hedge_replication_backtest(path, hs[j], cfg.market, cfg.vol, s.gap).error();
        }
      });
  std::string csv = "rebalance_dt,mean_error,rms_error,std_error,replicates\n";
  auto m = header(cfg);
  std::vector<double> rms(hs.size());
  for (std::size_t j = 0; j < hs.size(); ++j) {
    const Estimate e = estimate(errors[j]);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = errors[j][i] * errors[j][i];
    rms[j] = std::sqrt(pairwise_sum(sq) / static_cast<double>(n));
    csv += fmt::format("{},{},{},{},{}\n", num(hs[j]), num(e.mean), num(rms[j]), num(e.std_error), n);
    m.push_back(fmt::format("result.rms_error[{}]={}", num(hs[j]), num(rms[j])));
  }
  return {csv, m};
}

void add_rows(std::string& csv, std::vector<std::string>& m, const CheckReport& r) {
  for (const auto& row : r.rows) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", r.name, row.label, num(row.parameter), num(row.value.mean),
                       num(row.value.std_error), num(row.target), row.pass);
  }
  m.push_back(fmt::format("result.{}.pass={}", r.name, r.pass));
  if (!std::isnan(r.statistic)) m.push_back(fmt::format("result.{}.statistic={}", r.name, num(r.statistic)));
}

Artifacts run_check(const RunConfig& cfg, const InitialPath& theta) {
  const auto& s = cfg.simulation;
  const auto& ks = cfg.check.k_values;
  std::string csv = "check,label,parameter,estimate,std_error,target,pass\n";
  auto m = header(cfg);
  const CheckReport reports[] = {
      normalization_check(theta, cfg.drift, cfg.vol, cfg.market.rate, s),
      martingale_check(theta, cfg.drift, cfg.vol, s, cfg.market),
      moment_bound_check(ks, cfg.check.gamma, theta, cfg.drift, cfg.vol, s),
      increment_bound_check(ks, theta, cfg.drift, cfg.vol, s),
      measure_consistency_check(theta, cfg.drift, cfg.vol, s, cfg.market),
  };
  bool all = true;
  for (const auto& r : reports) {
    add_rows(csv, m, r);
    all = all && r.pass;
  }
  m.push_back(fmt::format("result.pass={}", all));
  return {csv, m};
}

}  // namespace

void apply(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.simulation.seed = *o.seed;
  if (o.out) cfg.output = *o.out;
  if (o.replicates) cfg.simulation.replicates = *o.replicates;
  if (o.antithetic) cfg.simulation.antithetic = true;
}

RunConfig load_config(const std::string& path, Command command, const Overrides& o) {
  std::vector<std::string> violations;
  RunConfig cfg = parse_config_raw(read_file(path), command, violations);
  apply(cfg, o);
  for (auto& v : validate(cfg)) violations.push_back(std::move(v));
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return cfg;
}

InitialPath build_initial_path(const RunConfig& cfg) {
  const auto& ip = cfg.initial_path;
  const auto& s = cfg.simulation;
  switch (ip.kind) {
    case InitialPathSpec::Kind::constant: return InitialPath::constant(s.window, s.dt, ip.level);
    case InitialPathSpec::Kind::values: return InitialPath(s.window, s.dt, ip.values);
    case InitialPathSpec::Kind::file: {
      std::ifstream in(ip.file);
      if (!in) throw ValidationError("cannot open initial path file '" + ip.file + "'");
      return load_initial_path_csv(in, s.window, s.dt);
    }
    case InitialPathSpec::Kind::holder: return make_holder_path(ip.beta, ip.seed, s.window, ip.level, s.dt, ip.scale);
  }
  throw ValidationError("unknown initial path kind");
}

Artifacts execute(const RunConfig& cfg) {
  const InitialPath theta = build_initial_path(cfg);
  switch (cfg.command) {
    case Command::simulate: return run_simulate(cfg, theta);
    case Command::price: return run_price(cfg, theta);
    case Command::converge: return run_converge(cfg, theta);
    case Command::hedge: return run_hedge(cfg, theta);
    case Command::check: return run_check(cfg, theta);
  }
  throw ValidationError("unknown command");
}

void emit(const Artifacts& a, const std::string& out) {
  std::string manifest;
  for (const auto& line : a.manifest) manifest += line + "\n";
  manifest += fmt::format("timestamp={:%Y-%m-%dT%H:%M:%SZ}\n",
                          std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
  if (out.empty()) {
    std::cout << a.csv << std::flush;
    std::cerr << manifest << std::flush;
    return;
  }
  std::ofstream csv(out, std::ios::binary);
  std::ofstream man(out + ".manifest", std::ios::binary);
  if (!csv || !man) throw ValidationError("cannot write output '" + out + "'");
  csv << a.csv;
  man << manifest;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Option pricing under stochastic functional differential equations with memory"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t replicates = 0;
  for (Command c : {Command::simulate, Command::price, Command::converge, Command::hedge, Command::check}) {
    auto* sub = app.add_subcommand(to_string(c));
    sub->add_option("--config", config_path, "YAML configuration file")->required();
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--out", out, "CSV output path; the manifest goes to <out>.manifest");
    sub->add_option("--replicates", replicates, "Monte Carlo replicates (overrides the config)");
    sub->add_flag("--antithetic", o.antithetic, "Use antithetic variates");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  const auto* sub = app.get_subcommands().front();
  const Command command = *parse_command(sub->get_name());
  if (sub->count("--seed") > 0) o.seed = seed;
  if (sub->count("--out") > 0) o.out = out;
  if (sub->count("--replicates") > 0) o.replicates = replicates;

  try {
    const RunConfig cfg = load_config(config_path, command, o);
    emit(execute(cfg), cfg.output);
    return 0;
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) std::cerr << "error: " << v << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace memsfde::cli
