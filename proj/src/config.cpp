#include "grdme/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "grdme/csv.hpp"
#include "grdme/errors.hpp"

namespace grdme {

namespace {

enum : unsigned {
  kCal = 1u << 0,
  kFpt = 1u << 1,
  kBind = 1u << 2,
  kRebind = 1u << 3,
  kConv = 1u << 4,
  kPair = kCal | kFpt | kBind | kRebind,
  kAll = kPair | kConv,
};

unsigned bit(Command c) { return 1u << static_cast<unsigned>(c); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void reject(std::string_view key, const std::string& why) {
  throw ConfigError(std::string(key) + ": " + why);
}

double parse_double(std::string_view key, std::string_view v, bool allow_inf = false) {
  if (v == "inf" || v == "+inf") {
    if (allow_inf) return std::numeric_limits<double>::infinity();
    reject(key, "must be finite");
  }
  double x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || v.empty()) reject(key, "expected a number, got '" + std::string(v) + "'");
  if (res.ptr != v.data() + v.size()) {
    const std::string_view rest = trim(std::string_view(res.ptr, v.data() + v.size() - res.ptr));
    if (!rest.empty() && std::isalpha(static_cast<unsigned char>(rest.front())))
      reject(key, "unit suffix '" + std::string(rest) + "' is not accepted; give the value in SI units");
    reject(key, "expected a number, got '" + std::string(v) + "'");
  }
  if (!std::isfinite(x)) reject(key, "must be finite");
  return x;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
    reject(key, "expected a nonnegative integer, got '" + std::string(v) + "'");
  return x;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  reject(key, "expected true or false");
}

std::vector<double> parse_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(parse_double(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string list_text(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_number(xs[i]);
  return s;
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

struct Key {
  const char* name;
  unsigned commands;  // where the key is accepted
  unsigned required;  // where it must be given
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Keys shared by the pair commands and the cascade refer to different
// fields; the setter dispatches on the command.
const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"output", kAll, 0, [](RunConfig& c, std::string_view v) { c.output_path = std::string(v); },
                 [](const RunConfig& c) { return c.output_path; }});
    k.push_back({"d", kPair, kPair,
                 [](RunConfig& c, std::string_view v) {
                   const auto d = parse_uint("d", v);
                   if (d != 2 && d != 3) reject("d", "must be 2 or 3");
                   c.d = static_cast<int>(d);
                 },
                 [](const RunConfig& c) { return std::to_string(c.d); }});
    k.push_back({"sigma", kPair, kPair, [](RunConfig& c, std::string_view v) { c.micro.sigma = parse_double("sigma", v); },
                 [](const RunConfig& c) { return format_number(c.micro.sigma); }});
    k.push_back({"D", kAll, kPair,
                 [](RunConfig& c, std::string_view v) {
                   (c.command == Command::converge ? c.cascade.D : c.micro.D) = parse_double("D", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.command == Command::converge ? c.cascade.D : c.micro.D);
                 }});
    k.push_back({"k_a", kAll, kPair,
                 [](RunConfig& c, std::string_view v) {
                   if (c.command == Command::converge) {
                     c.cascade.k_a = parse_double("k_a", v);
                     return;
                   }
                   const double x = parse_double("k_a", v, true);
                   c.micro.diffusion_limited = std::isinf(x);
                   c.micro.k_a = c.micro.diffusion_limited ? 0 : x;
                 },
                 [](const RunConfig& c) {
                   if (c.command == Command::converge) return format_number(c.cascade.k_a);
                   return c.micro.diffusion_limited ? std::string("inf") : format_number(c.micro.k_a);
                 }});
    k.push_back({"k_d", kAll, 0,
                 [](RunConfig& c, std::string_view v) {
                   (c.command == Command::converge ? c.cascade.k_d : c.micro.k_d) = parse_double("k_d", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.command == Command::converge ? c.cascade.k_d : c.micro.k_d);
                 }});
    k.push_back({"L", kAll, kPair,
                 [](RunConfig& c, std::string_view v) {
                   (c.command == Command::converge ? c.cascade.L : c.L) = parse_double("L", v);
                 },
                 [](const RunConfig& c) { return format_number(c.command == Command::converge ? c.cascade.L : c.L); }});
    k.push_back({"h", kAll, kAll, [](RunConfig& c, std::string_view v) { c.h = parse_list("h", v); },
                 [](const RunConfig& c) { return list_text(c.h); }});
    k.push_back({"n_samples", kBind | kRebind, 0,
                 [](RunConfig& c, std::string_view v) { c.n_samples = parse_uint("n_samples", v); },
                 [](const RunConfig& c) { return std::to_string(c.n_samples); }});
    k.push_back({"model", kBind, 0,
                 [](RunConfig& c, std::string_view v) {
                   if (v == "generalized")
                     c.model = RateModel::generalized;
                   else if (v == "standard")
                     c.model = RateModel::standard;
                   else
                     reject("model", "expected generalized or standard");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.model == RateModel::generalized ? "generalized" : "standard");
                 }});
    k.push_back({"t_min", kRebind, kRebind, [](RunConfig& c, std::string_view v) { c.t_min = parse_double("t_min", v); },
                 [](const RunConfig& c) { return format_number(c.t_min); }});
    k.push_back({"t_max", kRebind, kRebind, [](RunConfig& c, std::string_view v) { c.t_max = parse_double("t_max", v); },
                 [](const RunConfig& c) { return format_number(c.t_max); }});
    k.push_back({"n_times", kRebind, 0, [](RunConfig& c, std::string_view v) { c.n_times = parse_uint("n_times", v); },
                 [](const RunConfig& c) { return std::to_string(c.n_times); }});
    k.push_back({"include_standard", kRebind | kConv, 0,
                 [](RunConfig& c, std::string_view v) { c.include_standard = parse_bool("include_standard", v); },
                 [](const RunConfig& c) { return std::string(bool_text(c.include_standard)); }});
    k.push_back({"include_micro", kRebind, 0,
                 [](RunConfig& c, std::string_view v) { c.include_micro = parse_bool("include_micro", v); },
                 [](const RunConfig& c) { return std::string(bool_text(c.include_micro)); }});
    k.push_back({"micro_samples", kRebind, 0,
                 [](RunConfig& c, std::string_view v) { c.micro_samples = parse_uint("micro_samples", v); },
                 [](const RunConfig& c) { return std::to_string(c.micro_samples); }});
    k.push_back({"bd_dt", kRebind, 0, [](RunConfig& c, std::string_view v) { c.bd_dt = parse_double("bd_dt", v); },
                 [](const RunConfig& c) { return format_number(c.bd_dt); }});
    auto sigma_key = [&k](const char* name, double CascadeParams::*f) {
      k.push_back({name, kConv, 0, [name, f](RunConfig& c, std::string_view v) { c.cascade.*f = parse_double(name, v); },
                   [f](const RunConfig& c) { return format_number(c.cascade.*f); }});
    };
    sigma_key("sigma1", &CascadeParams::sigma1);
    sigma_key("sigma11", &CascadeParams::sigma11);
    sigma_key("sigma12", &CascadeParams::sigma12);
    sigma_key("sigma2", &CascadeParams::sigma2);
    sigma_key("sigma21", &CascadeParams::sigma21);
    sigma_key("sigma22", &CascadeParams::sigma22);
    sigma_key("sigma3", &CascadeParams::sigma3);
    k.push_back({"initial_S1", kConv, 0,
                 [](RunConfig& c, std::string_view v) {
                   const auto n = parse_uint("initial_S1", v);
                   if (n > 1000000) reject("initial_S1", "too large");
                   c.cascade.initial_S1 = static_cast<int>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.cascade.initial_S1); }});
    k.push_back({"n_realizations", kConv, 0,
                 [](RunConfig& c, std::string_view v) { c.n_realizations = parse_uint("n_realizations", v); },
                 [](const RunConfig& c) { return std::to_string(c.n_realizations); }});
    k.push_back({"reference_h", kConv, 0,
                 [](RunConfig& c, std::string_view v) { c.reference_h = parse_double("reference_h", v); },
                 [](const RunConfig& c) { return format_number(c.reference_h); }});
    return k;
  }();
  return table;
}

void validate(const RunConfig& c) {
  if (c.command == Command::converge) {
    for (double h : c.h) MeshSpec::from_width(3, c.cascade.L, h);
    if (c.reference_h != 0) MeshSpec::from_width(3, c.cascade.L, c.reference_h);
    if (c.n_realizations < 2) reject("n_realizations", "must be >= 2");
    return;
  }
  c.micro.validate();
  for (double h : c.h) MeshSpec::from_width(c.d, c.L, h);
  if (c.command == Command::binding && c.n_samples < 1) reject("n_samples", "must be >= 1");
  if (c.command == Command::rebinding) {
    if (c.n_samples < 10000) reject("n_samples", "must be >= 1e4");
    if (!(c.t_min > 0) || !(c.t_max > c.t_min)) reject("t_max", "need 0 < t_min < t_max");
    if (c.n_times < 2) reject("n_times", "must be >= 2");
    if (c.include_micro && c.micro_samples < 10000) reject("micro_samples", "must be >= 1e4");
    if (c.bd_dt < 0) reject("bd_dt", "must be >= 0");
    if (c.micro.diffusion_limited || !(c.micro.k_a > 0)) reject("k_a", "rebinding needs a finite positive k_a");
  }
}

bool same_micro(const MicroParams& a, const MicroParams& b) {
  return a.sigma == b.sigma && a.D == b.D && a.k_a == b.k_a && a.k_d == b.k_d &&
         a.diffusion_limited == b.diffusion_limited;
}

bool same_cascade(const CascadeParams& a, const CascadeParams& b) {
  return a.D == b.D && a.k_d == b.k_d && a.k_a == b.k_a && a.sigma1 == b.sigma1 && a.sigma11 == b.sigma11 &&
         a.sigma12 == b.sigma12 && a.sigma2 == b.sigma2 && a.sigma21 == b.sigma21 && a.sigma22 == b.sigma22 &&
         a.sigma3 == b.sigma3 && a.L == b.L && a.initial_S1 == b.initial_S1;
}

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::calibrate: return "calibrate";
    case Command::fpt: return "fpt";
    case Command::binding: return "binding";
    case Command::rebinding: return "rebinding";
    case Command::converge: return "converge";
  }
  return "?";
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::calibrate, Command::fpt, Command::binding, Command::rebinding, Command::converge})
    if (name == command_name(c)) return c;
  reject("command", "unknown command '" + std::string(name) + "'");
}

bool RunConfig::operator==(const RunConfig& o) const {
  return command == o.command && seed == o.seed && output_path == o.output_path && d == o.d &&
         same_micro(micro, o.micro) && L == o.L && h == o.h && n_samples == o.n_samples && model == o.model &&
         t_min == o.t_min && t_max == o.t_max && n_times == o.n_times && include_standard == o.include_standard &&
         include_micro == o.include_micro && micro_samples == o.micro_samples && bd_dt == o.bd_dt &&
         same_cascade(cascade, o.cascade) && n_realizations == o.n_realizations && reference_h == o.reference_h;
}

RunConfig parse_config(std::string_view text, std::optional<Command> command) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key");
    if (value.empty()) reject(key, "missing value");
    if (seen.count(key)) reject(key, "given more than once");
    seen[key] = entries.size();
    entries.emplace_back(key, value);
  }

  RunConfig c;
  if (auto it = seen.find("command"); it != seen.end()) {
    const Command in_text = parse_command(entries[it->second].second);
    if (command && *command != in_text)
      reject("command", std::string("config says ") + command_name(in_text) + " but " + command_name(*command) +
                            " was requested");
    command = in_text;
  }
  if (!command) reject("command", "missing");
  c.command = *command;
  c.n_samples = c.command == Command::rebinding ? 10000 : 100000;
  const unsigned b = bit(c.command);

  for (const auto& [key, value] : entries) {
    if (key == "command") continue;
    if (key == "seed") {
      c.seed = parse_uint("seed", value);
      continue;
    }
    const Key* def = nullptr;
    for (const auto& k : keys())
      if (key == k.name) def = &k;
    if (!def) reject(key, "unknown key");
    if (!(def->commands & b)) reject(key, std::string("not used by the ") + command_name(c.command) + " command");
    def->set(c, value);
  }
  for (const auto& k : keys())
    if ((k.required & b) && !seen.count(k.name)) reject(k.name, "missing");
  const bool needs_seed = c.command == Command::binding || c.command == Command::rebinding ||
                          c.command == Command::converge;
  if (needs_seed && !c.seed) reject("seed", "missing; stochastic runs must be explicitly seeded");
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path, std::optional<Command> command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), command);
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "command = " << command_name(c.command) << '\n';
  if (c.seed) os << "seed = " << *c.seed << '\n';
  const unsigned b = bit(c.command);
  for (const auto& k : keys()) {
    if (!(k.commands & b)) continue;
    const std::string v = k.get(c);
    if (v.empty()) continue;
    os << k.name << " = " << v << '\n';
  }
  return os.str();
}

}  // namespace grdme
