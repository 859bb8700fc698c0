#include "lodspde/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lodspde/errors.hpp"

namespace lodspde {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(fmt::format("bad value for '{}': '{}'", key, text));
  }
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  // Accept a/b fractions such as 1/16.
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const double num = parse_number<double>(key, trim(text.substr(0, slash)));
    const double den = parse_number<double>(key, trim(text.substr(slash + 1)));
    if (den == 0.0) throw ConfigError(fmt::format("zero denominator in '{}'", key));
    return num / den;
  }
  return parse_number<double>(key, text);
}

std::vector<int> parse_list(const std::string& key, const std::string& text) {
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    throw ConfigError(fmt::format("'{}' expects a list like [1, 2]", key));
  }
  std::vector<int> out;
  std::stringstream ss(text.substr(1, text.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number<int>(key, item));
  }
  return out;
}

std::string format_list(const std::vector<int>& v) {
  return fmt::format("[{}]", fmt::join(v, ", "));
}

}  // namespace

int ExperimentConfig::steps() const {
  return static_cast<int>(std::lround(final_time / timestep));
}

int ExperimentConfig::ell_for(int coarse_exponent) const {
  return ell ? *ell : coarse_exponent;
}

int ExperimentConfig::truncation() const {
  return default_truncation(fine_exponent, kappa_fraction);
}

std::vector<int> ExperimentConfig::all_coarse_exponents() const {
  std::set<int> s(coarse_exponents.begin(), coarse_exponents.end());
  s.insert(weak_mc_exponents.begin(), weak_mc_exponents.end());
  for (int p : weak_mlmc_exponents) {
    for (int q = 1; q <= p; ++q) s.insert(q);
  }
  return {s.begin(), s.end()};
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (fine_exponent < 2 || fine_exponent > 12) {
    fail("fine_exponent must be in [2, 12]");
  }
  if (epsilon_exponent < 0 || epsilon_exponent > fine_exponent) {
    fail("epsilon grid must divide the fine grid");
  }
  if (!(alpha_minus > 0.0) || !(alpha_plus >= alpha_minus)) {
    fail("contrast bounds need 0 < alpha_minus <= alpha_plus");
  }
  if (!(final_time > 0.0) || !(timestep > 0.0)) {
    fail("T and k must be positive");
  }
  if (std::abs(steps() * timestep - final_time) > 1e-12 * final_time ||
      steps() < 1) {
    fail("timestep must divide the final time");
  }
  const auto check_coarse = [&](const std::vector<int>& list,
                                const char* name) {
    for (int p : list) {
      if (p < 1 || p >= fine_exponent) {
        fail(fmt::format("{} entries must lie in [1, fine_exponent)", name));
      }
    }
  };
  check_coarse(coarse_exponents, "coarse_exponents");
  check_coarse(weak_mc_exponents, "weak_mc_exponents");
  check_coarse(weak_mlmc_exponents, "weak_mlmc_exponents");
  if (ell && *ell < 1) fail("ell must be >= 1");
  if (!(strong_amplitude >= 0.0) || !(weak_amplitude >= 0.0)) {
    fail("noise amplitudes must be nonnegative");
  }
  if (!(noise_decay > 0.0)) fail("noise_decay must be positive");
  if (!(kappa_fraction > 0.0)) fail("kappa_fraction must be positive");
  if (!(gamma > 0.0) || !(delta > 0.0)) fail("gamma and delta must be positive");
  if (samples_strong < 1) fail("samples_strong must be >= 1");
  if (pilot_samples < 1) fail("pilot_samples must be >= 1");
}

std::string ExperimentConfig::to_text() const {
  std::string s;
  auto line = [&s](std::string_view key, const std::string& value) {
    s += fmt::format("{} = {}\n", key, value);
  };
  line("fine_exponent", std::to_string(fine_exponent));
  line("coarse_exponents", format_list(coarse_exponents));
  line("epsilon_exponent", std::to_string(epsilon_exponent));
  line("alpha_minus", fmt::format("{:.17g}", alpha_minus));
  line("alpha_plus", fmt::format("{:.17g}", alpha_plus));
  line("final_time", fmt::format("{:.17g}", final_time));
  line("timestep", fmt::format("{:.17g}", timestep));
  line("strong_amplitude", fmt::format("{:.17g}", strong_amplitude));
  line("weak_amplitude", fmt::format("{:.17g}", weak_amplitude));
  line("noise_decay", fmt::format("{:.17g}", noise_decay));
  line("kappa_fraction", fmt::format("{:.17g}", kappa_fraction));
  line("ell", ell ? std::to_string(*ell) : std::string("\"auto\""));
  line("gamma", fmt::format("{:.17g}", gamma));
  line("delta", fmt::format("{:.17g}", delta));
  line("master_seed", std::to_string(master_seed));
  line("coefficient_seed", coefficient_seed ? std::to_string(*coefficient_seed)
                                            : std::string("\"derived\""));
  line("samples_strong", std::to_string(samples_strong));
  line("pilot_samples", std::to_string(pilot_samples));
  line("weak_mc_exponents", format_list(weak_mc_exponents));
  line("weak_mlmc_exponents", format_list(weak_mlmc_exponents));
  line("noise_rule", noise_rule == NoiseLoadRule::Nodal ? "\"nodal\""
                                                        : "\"quadrature\"");
  return s;
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : to_text()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in,
                                         const std::string& origin) {
  ExperimentConfig c;
  std::string raw;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string text = raw;
    // Comments: '#' outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '"') quoted = !quoted;
      if (text[i] == '#' && !quoted) {
        text.resize(i);
        break;
      }
    }
    text = trim(text);
    if (text.empty()) continue;
    if (text.front() == '[' && text.back() == ']') continue;  // table header
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(
          fmt::format("{}:{}: expected 'key = value'", origin, lineno));
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", origin, lineno, key));
    }
    const std::string bare = strip_quotes(value);
    try {
      if (key == "fine_exponent") {
        c.fine_exponent = parse_number<int>(key, bare);
      } else if (key == "coarse_exponents") {
        c.coarse_exponents = parse_list(key, value);
      } else if (key == "epsilon_exponent") {
        c.epsilon_exponent = parse_number<int>(key, bare);
      } else if (key == "alpha_minus") {
        c.alpha_minus = parse_real(key, bare);
      } else if (key == "alpha_plus") {
        c.alpha_plus = parse_real(key, bare);
      } else if (key == "final_time") {
        c.final_time = parse_real(key, bare);
      } else if (key == "timestep") {
        c.timestep = parse_real(key, bare);
      } else if (key == "strong_amplitude") {
        c.strong_amplitude = parse_real(key, bare);
      } else if (key == "weak_amplitude") {
        c.weak_amplitude = parse_real(key, bare);
      } else if (key == "noise_decay") {
        c.noise_decay = parse_real(key, bare);
      } else if (key == "kappa_fraction") {
        c.kappa_fraction = parse_real(key, bare);
      } else if (key == "ell") {
        if (bare == "auto") {
          c.ell.reset();
        } else {
          c.ell = parse_number<int>(key, bare);
        }
      } else if (key == "gamma") {
        c.gamma = parse_real(key, bare);
      } else if (key == "delta") {
        c.delta = parse_real(key, bare);
      } else if (key == "master_seed") {
        c.master_seed = parse_number<std::uint64_t>(key, bare);
      } else if (key == "coefficient_seed") {
        if (bare == "derived") {
          c.coefficient_seed.reset();
        } else {
          c.coefficient_seed = parse_number<std::uint64_t>(key, bare);
        }
      } else if (key == "samples_strong") {
        c.samples_strong = parse_number<int>(key, bare);
      } else if (key == "pilot_samples") {
        c.pilot_samples = parse_number<int>(key, bare);
      } else if (key == "weak_mc_exponents") {
        c.weak_mc_exponents = parse_list(key, value);
      } else if (key == "weak_mlmc_exponents") {
        c.weak_mlmc_exponents = parse_list(key, value);
      } else if (key == "noise_rule") {
        if (bare == "nodal") {
          c.noise_rule = NoiseLoadRule::Nodal;
        } else if (bare == "quadrature") {
          c.noise_rule = NoiseLoadRule::Quadrature;
        } else {
          throw ConfigError("noise_rule must be \"nodal\" or \"quadrature\"");
        }
      } else {
        throw ConfigError(fmt::format("unknown key '{}'", key));
      }
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", origin, lineno, e.what()));
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  }
  return parse(in, path.string());
}

EvolutionProblem make_problem(const ExperimentConfig& config,
                              double amplitude) {
  NoiseModel noise;
  noise.amplitude = amplitude;
  noise.decay = config.noise_decay;
  noise.truncation = config.truncation();
  EvolutionProblem p = EvolutionProblem::standard(noise);
  p.final_time = config.final_time;
  p.steps = config.steps();
  p.noise.steps = p.steps;
  p.noise.timestep = p.timestep();
  p.noise_rule = config.noise_rule;
  return p;
}

}  // namespace lodspde
