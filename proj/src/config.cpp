#include "bsps/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bsps/csv.hpp"
#include "bsps/errors.hpp"

namespace bsps {

void RunConfig::apply_kind_defaults(ForecastKind kind) {
  if (n_burn < 0) n_burn = kind == ForecastKind::Gaussian ? 1000 : 3000;
  if (n_keep < 0) n_keep = kind == ForecastKind::Gaussian ? 1000 : 7000;
}

PriorConfig RunConfig::priors(int num_agents, double d_max) const {
  PriorConfig p = PriorConfig::defaults(num_agents, d_max);
  p.a_sigma = a_sigma;
  p.b_sigma = b_sigma;
  p.a_tau = a_tau;
  p.b_tau = b_tau;
  if (g_lo) p.g_lo = *g_lo;
  if (g_hi) p.g_hi = *g_hi;
  return p;
}

ChainConfig RunConfig::chain_config() const {
  ChainConfig c;
  c.n_burn = n_burn < 0 ? 1000 : n_burn;
  c.n_keep = n_keep < 0 ? 1000 : n_keep;
  c.thin = thin;
  c.backend = backend;
  c.m = m;
  c.mh_step = mh_step;
  c.adapt_mh = adapt_mh;
  c.seed = seed;
  return c;
}

void RunConfig::validate() const {
  if (method != "mcmc" && method != "vb")
    throw ConfigError("method must be 'mcmc' or 'vb'");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
  if (!(a_sigma > 0 && b_sigma > 0 && a_tau > 0 && b_tau > 0))
    throw ConfigError("prior shape/rate parameters must be positive");
  if (g_lo && g_hi && !(*g_lo > 0 && *g_lo < *g_hi))
    throw ConfigError("need 0 < priors.g_lo < priors.g_hi");
  if (thin < 1) throw ConfigError("chain.thin must be >= 1");
  if (m < 1) throw ConfigError("chain.m must be >= 1");
  if (vb_grid < 1) throw ConfigError("vb.grid must be >= 1");
  if (!(vb_tol > 0)) throw ConfigError("vb.tol must be > 0");
  if (vb_max_iter < 1) throw ConfigError("vb.max_iter must be >= 1");
  if (vb_warmstart && *vb_warmstart < 0) throw ConfigError("vb.warmstart must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

double parse_num(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError(key + ": not a number: '" + value + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_num(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) throw ConfigError(key + ": not an integer: '" + value + "'");
  return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": not a boolean: '" + value + "'");
}

}  // namespace

void RunConfig::apply_entry(const std::string& key, const std::string& value) {
  if (key == "method") {
    if (value != "mcmc" && value != "vb") throw ConfigError("method: must be mcmc or vb");
    method = value;
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_num(key, value));
  } else if (key == "threads") {
    threads = parse_int(key, value);
  } else if (key == "alpha") {
    alpha = parse_num(key, value);
  } else if (key == "priors.a_sigma") {
    a_sigma = parse_num(key, value);
  } else if (key == "priors.b_sigma") {
    b_sigma = parse_num(key, value);
  } else if (key == "priors.a_tau") {
    a_tau = parse_num(key, value);
  } else if (key == "priors.b_tau") {
    b_tau = parse_num(key, value);
  } else if (key == "priors.g_lo") {
    g_lo = parse_num(key, value);
  } else if (key == "priors.g_hi") {
    g_hi = parse_num(key, value);
  } else if (key == "chain.backend") {
    if (value == "full")
      backend = BackendKind::FullGp;
    else if (value == "nngp")
      backend = BackendKind::Nngp;
    else
      throw ConfigError("chain.backend: must be full or nngp");
  } else if (key == "chain.m") {
    m = parse_int(key, value);
  } else if (key == "chain.burn") {
    n_burn = parse_int(key, value);
  } else if (key == "chain.keep") {
    n_keep = parse_int(key, value);
  } else if (key == "chain.thin") {
    thin = parse_int(key, value);
  } else if (key == "chain.mh_step") {
    mh_step = parse_num(key, value);
  } else if (key == "chain.adapt") {
    adapt_mh = parse_bool(key, value);
  } else if (key == "vb.grid") {
    vb_grid = parse_int(key, value);
  } else if (key == "vb.tol") {
    vb_tol = parse_num(key, value);
  } else if (key == "vb.max_iter") {
    vb_max_iter = parse_int(key, value);
  } else if (key == "vb.warmstart") {
    vb_warmstart = parse_int(key, value);
  } else {
    throw ConfigError("unknown config key: '" + key + "'");
  }
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      apply_entry(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  out << "method = " << method << "\n";
  out << "seed = " << seed << "\n";
  out << "alpha = " << format_double(alpha) << "\n";
  out << "priors.a_sigma = " << format_double(a_sigma) << "\n";
  out << "priors.b_sigma = " << format_double(b_sigma) << "\n";
  out << "priors.a_tau = " << format_double(a_tau) << "\n";
  out << "priors.b_tau = " << format_double(b_tau) << "\n";
  if (g_lo) out << "priors.g_lo = " << format_double(*g_lo) << "\n";
  if (g_hi) out << "priors.g_hi = " << format_double(*g_hi) << "\n";
  out << "chain.backend = " << (backend == BackendKind::FullGp ? "full" : "nngp") << "\n";
  out << "chain.m = " << m << "\n";
  out << "chain.burn = " << n_burn << "\n";
  out << "chain.keep = " << n_keep << "\n";
  out << "chain.thin = " << thin << "\n";
  out << "chain.mh_step = " << format_double(mh_step) << "\n";
  out << "chain.adapt = " << (adapt_mh ? "true" : "false") << "\n";
  out << "vb.grid = " << vb_grid << "\n";
  out << "vb.tol = " << format_double(vb_tol) << "\n";
  out << "vb.max_iter = " << vb_max_iter << "\n";
  if (vb_warmstart) out << "vb.warmstart = " << *vb_warmstart << "\n";
  return out.str();
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("BSPS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace bsps
