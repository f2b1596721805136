#include "config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace memsfde::cli {

const char* to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::price: return "price";
    case Command::converge: return "converge";
    case Command::hedge: return "hedge";
    case Command::check: return "check";
  }
  return "unknown";
}

std::optional<Command> parse_command(const std::string& name) {
  for (Command c : {Command::simulate, Command::price, Command::converge, Command::hedge, Command::check}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

/// Collects violations while walking the YAML tree.
class Reader {
 public:
  std::vector<std::string> errors;

  void keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) {
      errors.push_back(where + ": expected a mapping");
      return;
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!ok.contains(key)) errors.push_back("unknown key '" + qualify(where, key) + "'");
    }
  }

  template <class T>
  void get(const YAML::Node& node, const std::string& where, const char* key, T& out) {
    if (!node.IsMap() || !node[key]) return;
    try {
      out = node[key].as<T>();
    } catch (const YAML::Exception&) {
      errors.push_back("'" + qualify(where, key) + "' has the wrong type");
    }
  }

  template <class T>
  bool require(const YAML::Node& node, const std::string& where, const char* key, T& out) {
    if (!node.IsMap() || !node[key]) {
      errors.push_back("missing key '" + qualify(where, key) + "'");
      return false;
    }
    const std::size_t before = errors.size();
    get(node, where, key, out);
    return errors.size() == before;
  }

  static std::string qualify(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }
};

std::optional<FunctionalSpec> read_functional(Reader& rd, const YAML::Node& node, const std::string& where,
                                              bool is_vol) {
  if (!node || !node.IsMap()) {
    rd.errors.push_back("missing section '" + where + "'");
    return std::nullopt;
  }
  std::string kind;
  if (!rd.require(node, where, "kind", kind)) return std::nullopt;
  std::optional<double> declared_max, declared_lip;
  if (node["max_abs"]) {
    double v = 0.0;
    rd.get(node, where, "max_abs", v);
    declared_max = v;
  }
  if (node["lipschitz"]) {
    double v = 0.0;
    rd.get(node, where, "lipschitz", v);
    declared_lip = v;
  }
  std::optional<FunctionalSpec> spec;
  try {
    if (kind == "constant") {
      rd.keys(node, where, {"kind", "value", "max_abs", "lipschitz"});
      double value = 0.0;
      if (rd.require(node, where, "value", value)) {
        if (is_vol && !(value > 0.0)) {
          rd.errors.push_back("'" + where + ".value' must be positive for a constant volatility");
        } else {
          spec = FunctionalSpec::constant(value);
        }
      }
    } else if (kind == "moving_average") {
      rd.keys(node, where, {"kind", "window", "max_abs", "lipschitz"});
      double window = 0.0;
      if (rd.require(node, where, "window", window)) spec = FunctionalSpec::moving_average(window);
    } else if (kind == "realized_vol") {
      rd.keys(node, where, {"kind", "window", "floor", "cap", "max_abs", "lipschitz"});
      double window = 0.0, floor = 0.01, cap = 1.0;
      rd.get(node, where, "floor", floor);
      rd.get(node, where, "cap", cap);
      if (rd.require(node, where, "window", window)) {
        if (!(floor > 0.0 && floor < cap)) {
          rd.errors.push_back("'" + where + "' realized_vol requires 0 < floor < cap");
        } else {
          spec = FunctionalSpec::realized_vol(window, floor, cap);
        }
      }
    } else if (kind == "affine") {
      rd.keys(node, where, {"kind", "inner", "scale", "shift", "max_abs", "lipschitz"});
      double scale = 1.0, shift = 0.0;
      rd.get(node, where, "scale", scale);
      rd.get(node, where, "shift", shift);
      auto inner = read_functional(rd, node["inner"], where + ".inner", false);
      if (inner) spec = FunctionalSpec::affine_of(*inner, scale, shift);
    } else {
      rd.errors.push_back("'" + where + ".kind' must be one of constant, moving_average, realized_vol, affine (got '" +
                          kind + "')");
    }
  } catch (const ValidationError& e) {
    rd.errors.push_back(where + ": " + e.what());
  }
  if (spec && declared_max) spec = spec->with_declared_max_abs(*declared_max);
  if (spec && declared_lip) spec = spec->with_declared_lipschitz(*declared_lip);
  return spec;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : ValidationError("invalid configuration: " + join(violations)), violations_(std::move(violations)) {}

RunConfig parse_config_raw(const std::string& text, Command command) {
  std::vector<std::string> errors;
  RunConfig cfg = parse_config_raw(text, command, errors);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

RunConfig parse_config_raw(const std::string& text, Command command, std::vector<std::string>& errors) {
  Reader rd;
  RunConfig cfg;
  cfg.command = command;
  cfg.simulation.replicates = 10000;
  cfg.simulation.seed = 0;

  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError({std::string("YAML syntax error: ") + e.what()});
  }
  if (!root.IsMap()) throw ConfigError({"config must be a YAML mapping"});
  rd.keys(root, "", {"market", "simulation", "drift", "vol", "initial_path", "output", "price", "converge", "hedge",
                     "check"});

  if (const auto m = root["market"]) {
    rd.keys(m, "market", {"rate", "strike", "maturity"});
    rd.get(m, "market", "rate", cfg.market.rate);
    rd.require(m, "market", "strike", cfg.market.strike);
    rd.require(m, "market", "maturity", cfg.market.maturity);
  } else {
    rd.errors.push_back("missing section 'market'");
  }
  cfg.simulation.horizon = cfg.market.maturity;

  if (const auto s = root["simulation"]) {
    rd.keys(s, "simulation",
            {"gap", "window", "dt", "measure", "seed", "replicates", "antithetic", "stream", "threads", "noise"});
    rd.require(s, "simulation", "gap", cfg.simulation.gap);
    rd.require(s, "simulation", "window", cfg.simulation.window);
    cfg.simulation.dt = cfg.simulation.gap / 16.0;
    rd.get(s, "simulation", "dt", cfg.simulation.dt);
    std::string measure = "P";
    rd.get(s, "simulation", "measure", measure);
    if (measure == "P") {
      cfg.simulation.measure = Measure::physical;
    } else if (measure == "Q") {
      cfg.simulation.measure = Measure::risk_neutral;
    } else {
      rd.errors.push_back("'simulation.measure' must be P or Q");
    }
    rd.get(s, "simulation", "seed", cfg.simulation.seed);
    rd.get(s, "simulation", "replicates", cfg.simulation.replicates);
    rd.get(s, "simulation", "antithetic", cfg.simulation.antithetic);
    rd.get(s, "simulation", "stream", cfg.stream);
    rd.get(s, "simulation", "threads", cfg.simulation.threads);
    std::string noise = "brownian";
    rd.get(s, "simulation", "noise", noise);
    if (noise == "brownian") {
      cfg.simulation.noise = Noise::brownian;
    } else if (noise == "none") {
      cfg.simulation.noise = Noise::none;
    } else {
      rd.errors.push_back("'simulation.noise' must be brownian or none");
    }
  } else {
    rd.errors.push_back("missing section 'simulation'");
  }
  cfg.simulation.rate = cfg.market.rate;

  if (auto f = read_functional(rd, root["drift"], "drift", false)) cfg.drift = *f;
  if (auto g = read_functional(rd, root["vol"], "vol", true)) cfg.vol = *g;

  if (const auto p = root["initial_path"]) {
    rd.keys(p, "initial_path", {"level", "values", "file", "holder"});
    int given = 0;
    if (p["level"]) {
      ++given;
      cfg.initial_path.kind = InitialPathSpec::Kind::constant;
      rd.get(p, "initial_path", "level", cfg.initial_path.level);
    }
    if (p["values"]) {
      ++given;
      cfg.initial_path.kind = InitialPathSpec::Kind::values;
      rd.get(p, "initial_path", "values", cfg.initial_path.values);
    }
    if (p["file"]) {
      ++given;
      cfg.initial_path.kind = InitialPathSpec::Kind::file;
      rd.get(p, "initial_path", "file", cfg.initial_path.file);
    }
    if (const auto h = p["holder"]) {
      ++given;
      cfg.initial_path.kind = InitialPathSpec::Kind::holder;
      rd.keys(h, "initial_path.holder", {"beta", "level", "scale", "seed"});
      rd.get(h, "initial_path.holder", "beta", cfg.initial_path.beta);
      rd.get(h, "initial_path.holder", "level", cfg.initial_path.level);
      rd.get(h, "initial_path.holder", "scale", cfg.initial_path.scale);
      rd.get(h, "initial_path.holder", "seed", cfg.initial_path.seed);
    }
    if (given != 1) rd.errors.push_back("'initial_path' needs exactly one of level, values, file, holder");
  } else {
    rd.errors.push_back("missing section 'initial_path'");
  }

  rd.get(root, "", "output", cfg.output);

  if (const auto p = root["price"]) {
    rd.keys(p, "price", {"method", "time", "path_file", "approx_k", "payoff"});
    rd.get(p, "price", "method", cfg.price.method);
    rd.get(p, "price", "time", cfg.price.time);
    rd.get(p, "price", "path_file", cfg.price.path_file);
    rd.get(p, "price", "approx_k", cfg.price.approx_k);
    std::string payoff = "call";
    rd.get(p, "price", "payoff", payoff);
    if (payoff == "call") {
      cfg.price.payoff = Payoff::call;
    } else if (payoff == "put") {
      cfg.price.payoff = Payoff::put;
    } else {
      rd.errors.push_back("'price.payoff' must be call or put");
    }
  }
  if (const auto c = root["converge"]) {
    rd.keys(c, "converge", {"k_values", "beta"});
    rd.get(c, "converge", "k_values", cfg.converge.k_values);
    rd.get(c, "converge", "beta", cfg.converge.beta);
  }
  if (const auto h = root["hedge"]) {
    rd.keys(h, "hedge", {"rebalance_dt"});
    rd.get(h, "hedge", "rebalance_dt", cfg.hedge.rebalance_dt);
  }
  if (const auto c = root["check"]) {
    rd.keys(c, "check", {"k_values", "gamma"});
    rd.get(c, "check", "k_values", cfg.check.k_values);
    rd.get(c, "check", "gamma", cfg.check.gamma);
  }

  errors.insert(errors.end(), rd.errors.begin(), rd.errors.end());
  return cfg;
}

std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> v;
  const auto& m = cfg.market;
  const auto& s = cfg.simulation;
  if (!(m.strike > 0.0)) v.push_back("strike must be positive");
  if (!(m.maturity > 0.0)) v.push_back("maturity must be positive");
  if (!(m.rate >= 0.0)) v.push_back("rate must be >= 0");
  if (!(s.gap > 0.0)) v.push_back("gap l must be positive");
  if (!(s.window > 0.0)) v.push_back("window L must be positive");
  if (!(s.dt > 0.0)) {
    v.push_back("dt must be positive");
  } else {
    if (s.gap > 0.0 && s.gap < s.dt * (1.0 - kDivisibilityTol)) v.push_back("gap l is smaller than dt");
    if (s.gap > 0.0 && !divides(s.dt, s.gap)) v.push_back(fmt::format("dt = {} does not divide gap l = {}", s.dt, s.gap));
    if (s.window > 0.0 && !divides(s.dt, s.window)) {
      v.push_back(fmt::format("dt = {} does not divide window L = {}", s.dt, s.window));
    }
    if (m.maturity > 0.0 && !divides(s.dt, m.maturity)) {
      v.push_back(fmt::format("dt = {} does not divide maturity T = {}", s.dt, m.maturity));
    }
  }
  if (s.replicates < 1) v.push_back("replicates must be >= 1");

  for (const auto* spec : {&cfg.drift, &cfg.vol}) {
    const auto w = spec->window();
    if (w && std::abs(*w - s.window) > kDivisibilityTol * std::max(1.0, s.window)) {
      v.push_back(fmt::format("{} window {} must equal simulation window L = {}",
                              spec == &cfg.drift ? "drift" : "vol", *w, s.window));
    }
  }
  if (!cfg.vol.positive_on_positive()) v.push_back("vol must be positive on positive paths");

  const auto& ip = cfg.initial_path;
  switch (ip.kind) {
    case InitialPathSpec::Kind::constant:
      if (!(ip.level > 0.0)) v.push_back("initial path level must be positive");
      break;
    case InitialPathSpec::Kind::values: {
      if (std::any_of(ip.values.begin(), ip.values.end(), [](double x) { return !(x > 0.0); })) {
        v.push_back("initial path samples must be strictly positive");
      }
      if (s.dt > 0.0 && divides(s.dt, s.window)) {
        const auto n = static_cast<std::size_t>(std::llround(s.window / s.dt)) + 1;
        if (ip.values.size() != n) {
          v.push_back(fmt::format("initial_path.values needs {} samples (L/dt + 1), got {}", n, ip.values.size()));
        }
      }
      break;
    }
    case InitialPathSpec::Kind::file:
      if (!std::ifstream(ip.file)) v.push_back("initial path file '" + ip.file + "' cannot be opened");
      break;
    case InitialPathSpec::Kind::holder:
      if (!(ip.beta > 0.0 && ip.beta < 0.5)) v.push_back("initial_path.holder.beta must lie in (0, 1/2)");
      if (!(ip.level > 0.0)) v.push_back("initial path level must be positive");
      break;
  }

  static const std::set<std::string> methods{"auto",   "closed_form", "nested", "full_memory_mc",
                                             "gap_mc", "black_scholes"};
  if (cfg.command == Command::price) {
    const auto& p = cfg.price;
    if (!methods.contains(p.method)) v.push_back("price.method '" + p.method + "' is not recognised");
    if (!(p.time >= 0.0) || p.time >= m.maturity) v.push_back("price.time must lie in [0, T)");
    if (p.time > 0.0 && p.path_file.empty()) v.push_back("price.time > 0 needs price.path_file");
    if (p.approx_k < 1) v.push_back("price.approx_k must be >= 1");
    if (p.time > 0.0 && (p.method == "gap_mc" || p.method == "full_memory_mc" || p.method == "black_scholes")) {
      v.push_back("price.method '" + p.method + "' only prices at t = 0");
    }
    if (p.method == "full_memory_mc" && p.approx_k >= 1 && s.dt > 0.0) {
      const double gap = 1.0 / p.approx_k;
      if (gap < s.dt * (1.0 - kDivisibilityTol) || !divides(s.dt, gap)) {
        v.push_back(fmt::format("1/approx_k = {} is not a multiple of dt", gap));
      }
    }
    if (p.payoff == Payoff::put && p.method != "full_memory_mc" && p.method != "gap_mc") {
      v.push_back("put payoff is only priced by full_memory_mc or gap_mc");
    }
    if (p.method == "black_scholes" && !std::holds_alternative<FunctionalSpec::Constant>(cfg.vol.kind())) {
      v.push_back("black_scholes needs a constant vol");
    }
  }
  const auto check_ks = [&](const std::vector<int>& ks, bool doubles, const char* where) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] < 1) {
        v.push_back(fmt::format("{}: k values must be >= 1", where));
        continue;
      }
      if (i > 0 && ks[i] <= ks[i - 1]) v.push_back(fmt::format("{}: k values must be strictly increasing", where));
      const double gap = 1.0 / (doubles ? 2 * ks[i] : ks[i]);
      if (s.dt > 0.0 && (gap < s.dt * (1.0 - kDivisibilityTol) || !divides(s.dt, gap))) {
        v.push_back(fmt::format("{}: 1/{} is not a multiple of dt", where, doubles ? 2 * ks[i] : ks[i]));
      }
    }
  };
  if (cfg.command == Command::converge) {
    if (cfg.converge.k_values.size() < 3) v.push_back("converge.k_values needs at least 3 values");
    check_ks(cfg.converge.k_values, true, "converge.k_values");
    if (!(cfg.converge.beta > 0.0 && cfg.converge.beta < 0.5)) v.push_back("converge.beta must lie in (0, 1/2)");
  }
  if (cfg.command == Command::check) {
    if (cfg.check.k_values.empty()) v.push_back("check.k_values must not be empty");
    check_ks(cfg.check.k_values, false, "check.k_values");
    if (cfg.check.gamma != 1 && cfg.check.gamma != 2) v.push_back("check.gamma must be 1 or 2");
  }
  if (cfg.command == Command::hedge) {
    if (cfg.hedge.rebalance_dt.empty() && s.dt > 0.0 && s.gap > 0.0 &&
        (!divides(s.dt, s.gap / 4.0) || !divides(s.dt, s.gap / 8.0))) {
      v.push_back("default hedge.rebalance_dt {l/4, l/8} must be multiples of dt");
    }
    for (double h : cfg.hedge.rebalance_dt) {
      if (!(h > 0.0) || (s.dt > 0.0 && !divides(s.dt, h))) {
        v.push_back(fmt::format("hedge.rebalance_dt {} must be a positive multiple of dt", h));
      }
    }
  }
  return v;
}

RunConfig parse_config(const std::string& text, Command command) {
  std::vector<std::string> violations;
  RunConfig cfg = parse_config_raw(text, command, violations);
  for (auto& v : validate(cfg)) violations.push_back(std::move(v));
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return cfg;
}

std::string describe(const FunctionalSpec& spec) {
  return std::visit(
      [&](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, FunctionalSpec::Constant>) {
          return fmt::format("constant({:.17g})", k.value);
        } else if constexpr (std::is_same_v<K, FunctionalSpec::MovingAverage>) {
          return fmt::format("moving_average({:.17g})", k.window);
        } else if constexpr (std::is_same_v<K, FunctionalSpec::RealizedVol>) {
          return fmt::format("realized_vol({:.17g},{:.17g},{:.17g})", k.window, k.floor, k.cap);
        } else {
          return fmt::format("affine({},{:.17g},{:.17g})", describe(*k.inner), k.scale, k.shift);
        }
      },
      spec.kind());
}

namespace {

template <class T>
std::string list(const std::vector<T>& v) {
  std::string out;
  for (const auto& x : v) {
    if (!out.empty()) out += ",";
    out += fmt::format("{:.17g}", static_cast<double>(x));
  }
  return out;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : ss.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace

std::vector<std::string> describe(const RunConfig& cfg) {
  const auto& s = cfg.simulation;
  std::vector<std::string> out{
      fmt::format("command={}", to_string(cfg.command)),
      fmt::format("market.rate={:.17g}", cfg.market.rate),
      fmt::format("market.strike={:.17g}", cfg.market.strike),
      fmt::format("market.maturity={:.17g}", cfg.market.maturity),
      fmt::format("simulation.gap={:.17g}", s.gap),
      fmt::format("simulation.window={:.17g}", s.window),
      fmt::format("simulation.dt={:.17g}", s.dt),
      fmt::format("simulation.measure={}", memsfde::to_string(s.measure)),
      fmt::format("simulation.seed={}", s.seed),
      fmt::format("simulation.replicates={}", s.replicates),
      fmt::format("simulation.antithetic={}", s.antithetic),
      fmt::format("simulation.stream={}", cfg.stream),
      fmt::format("simulation.noise={}", s.noise == Noise::none ? "none" : "brownian"),
      fmt::format("drift={}", describe(cfg.drift)),
      fmt::format("vol={}", describe(cfg.vol)),
  };
  const auto& ip = cfg.initial_path;
  switch (ip.kind) {
    case InitialPathSpec::Kind::constant: out.push_back(fmt::format("initial_path.level={:.17g}", ip.level)); break;
    case InitialPathSpec::Kind::values: out.push_back("initial_path.values=" + list(ip.values)); break;
    case InitialPathSpec::Kind::file:
      out.push_back("initial_path.file=" + ip.file);
      out.push_back("initial_path.file_fnv1a=" + file_digest(ip.file));
      break;
    case InitialPathSpec::Kind::holder:
      out.push_back(fmt::format("initial_path.holder=beta:{:.17g},level:{:.17g},scale:{:.17g},seed:{}", ip.beta,
                                ip.level, ip.scale, ip.seed));
      break;
  }
  switch (cfg.command) {
    case Command::price:
      out.push_back("price.method=" + cfg.price.method);
      out.push_back(fmt::format("price.time={:.17g}", cfg.price.time));
      out.push_back(fmt::format("price.approx_k={}", cfg.price.approx_k));
      out.push_back(fmt::format("price.payoff={}", cfg.price.payoff == Payoff::call ? "call" : "put"));
      if (!cfg.price.path_file.empty()) {
        out.push_back("price.path_file=" + cfg.price.path_file);
        out.push_back("price.path_file_fnv1a=" + file_digest(cfg.price.path_file));
      }
      break;
    case Command::converge:
      out.push_back("converge.k_values=" + list(cfg.converge.k_values));
      out.push_back(fmt::format("converge.beta={:.17g}", cfg.converge.beta));
      break;
    case Command::hedge: out.push_back("hedge.rebalance_dt=" + list(cfg.hedge.rebalance_dt)); break;
    case Command::check:
      out.push_back("check.k_values=" + list(cfg.check.k_values));
      out.push_back(fmt::format("check.gamma={}", cfg.check.gamma));
      break;
    case Command::simulate: break;
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& line : describe(cfg)) {
    for (unsigned char c : line) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= '\n';
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace memsfde::cli
