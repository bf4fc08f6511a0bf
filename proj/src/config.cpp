#include "cmfilter/config.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "cmfilter/errors.hpp"

namespace cmf {

namespace {

[[noreturn]] void fail(long line, const std::string& msg) {
    throw ConfigError(line > 0 ? "config line " + std::to_string(line) + ": " + msg : msg);
}

double to_double(const std::string& v, long line, const std::string& key) {
    try {
        double d = parse_double(v, line);
        if (!std::isfinite(d)) fail(line, "'" + key + "' must be finite");
        return d;
    } catch (const ParseError&) {
        fail(line, "'" + key + "' expects a number, got '" + v + "'");
    }
}

long to_long(const std::string& v, long line, const std::string& key) {
    try {
        return parse_long(v, line);
    } catch (const ParseError&) {
        fail(line, "'" + key + "' expects an integer, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& v, long line, const std::string& key) {
    std::uint64_t out = 0;
    auto t = trim(v);
    auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        fail(line, "'" + key + "' expects an unsigned integer, got '" + v + "'");
    return out;
}

int to_int(const std::string& v, long line, const std::string& key) {
    long x = to_long(v, line, key);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        fail(line, "'" + key + "' out of range");
    return static_cast<int>(x);
}

bool to_bool(const std::string& v, long line, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(line, "'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v, long line, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : split(v, ',')) out.push_back(to_double(tok, line, key));
    return out;
}

std::vector<int> to_ints(const std::string& v, long line, const std::string& key) {
    std::vector<int> out;
    for (const auto& tok : split(v, ',')) out.push_back(to_int(tok, line, key));
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

using Setter = std::function<void(RunConfig&, const std::string&, long)>;
using Getter = std::function<std::optional<std::string>(const RunConfig&)>;

struct Field {
    std::string section;
    std::string key;
    bool required;
    Setter set;
    Getter get;
};

#define DBL(sec, name, member)                                                                         \
    Field{sec, name, false, [](RunConfig& c, const std::string& v, long l) { c.member = to_double(v, l, name); }, \
          [](const RunConfig& c) -> std::optional<std::string> { return format_double(c.member); }}
#define INT(sec, name, member, req)                                                                    \
    Field{sec, name, req, [](RunConfig& c, const std::string& v, long l) { c.member = to_int(v, l, name); }, \
          [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.member); }}
#define LONG(sec, name, member)                                                                        \
    Field{sec, name, false, [](RunConfig& c, const std::string& v, long l) { c.member = to_long(v, l, name); }, \
          [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.member); }}
#define U64(sec, name, member)                                                                         \
    Field{sec, name, false, [](RunConfig& c, const std::string& v, long l) { c.member = to_u64(v, l, name); }, \
          [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.member); }}
#define STR(sec, name, member, req)                                                                    \
    Field{sec, name, req, [](RunConfig& c, const std::string& v, long) { c.member = v; },              \
          [](const RunConfig& c) -> std::optional<std::string> { return c.member; }}
#define OPT(sec, name, member)                                                                         \
    Field{sec, name, false, [](RunConfig& c, const std::string& v, long l) { c.member = to_double(v, l, name); }, \
          [](const RunConfig& c) -> std::optional<std::string> {                                       \
              if (!c.member) return std::nullopt;                                                      \
              return format_double(*c.member);                                                         \
          }}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        STR("model", "id", model.id, false),
        STR("model", "kernel", model.kernel, true),
        STR("model", "observation", model.observation, true),
        INT("model", "N", model.N, true),
        Field{"model", "lower", true,
              [](RunConfig& c, const std::string& v, long l) { c.model.lower = to_doubles(v, l, "lower"); },
              [](const RunConfig& c) -> std::optional<std::string> { return format_list(c.model.lower); }},
        Field{"model", "upper", true,
              [](RunConfig& c, const std::string& v, long l) { c.model.upper = to_doubles(v, l, "upper"); },
              [](const RunConfig& c) -> std::optional<std::string> { return format_list(c.model.upper); }},
        DBL("model", "step_sd", model.step_sd),
        DBL("model", "alpha", model.alpha),
        DBL("model", "beta", model.beta),
        DBL("model", "sigma_xi_sq", model.sigma_xi_sq),
        DBL("model", "obs_scale", model.obs_scale),
        INT("model", "states_per_dim", model.states_per_dim, false),
        DBL("model", "stay", model.stay),
        U64("model", "chain_seed", model.chain_seed),
        U64("model", "factor_seed", model.factor_seed),
        DBL("model", "factor_scale", model.factor_scale),
        OPT("constants", "lambda_inf", constants.lambda_inf),
        OPT("constants", "lambda_sup", constants.lambda_sup),
        OPT("constants", "mu_sup", constants.mu_sup),
        OPT("constants", "K_mu", constants.K_mu),
        OPT("constants", "K_sigma", constants.K_sigma),
        INT("experiment", "T", experiment.T, true),
        Field{"experiment", "resolutions", false,
              [](RunConfig& c, const std::string& v, long l) { c.experiment.resolutions = to_ints(v, l, "resolutions"); },
              [](const RunConfig& c) -> std::optional<std::string> { return join_ints(c.experiment.resolutions); }},
        LONG("experiment", "n_traj", experiment.n_traj),
        DBL("experiment", "C", experiment.C),
        U64("experiment", "seed", experiment.seed),
        INT("experiment", "A_ref", experiment.A_ref, false),
        Field{"experiment", "self_check", false,
              [](RunConfig& c, const std::string& v, long l) { c.experiment.self_check = to_bool(v, l, "self_check"); },
              [](const RunConfig& c) -> std::optional<std::string> { return c.experiment.self_check ? "true" : "false"; }},
        INT("experiment", "n_probe", experiment.n_probe, false),
        LONG("experiment", "n_pairs", experiment.n_pairs),
        LONG("experiment", "n_trials", experiment.n_trials),
        LONG("experiment", "n_concentration", experiment.n_concentration),
        OPT("experiment", "gamma", experiment.gamma),
        INT("experiment", "workers", experiment.workers, false),
        INT("filter", "resolution", filter.resolution, false),
        STR("filter", "build", filter.build, false),
        INT("filter", "mc_samples", filter.mc_samples, false),
        INT("filter", "quad_order", filter.quad_order, false),
        Field{"filter", "trajectory", false,
              [](RunConfig& c, const std::string& v, long) { c.filter.trajectory = v; },
              [](const RunConfig& c) -> std::optional<std::string> {
                  if (c.filter.trajectory.empty()) return std::nullopt;
                  return c.filter.trajectory;
              }},
        STR("output", "dir", output_dir, false),
    };
    return f;
}

#undef DBL
#undef INT
#undef LONG
#undef U64
#undef STR
#undef OPT

void validate(const RunConfig& c, const std::map<std::string, long>& lines) {
    auto line = [&](const std::string& k) {
        auto it = lines.find(k);
        return it == lines.end() ? 0L : it->second;
    };
    const auto& m = c.model;
    static const std::set<std::string> kernels{"random_walk", "uniform", "identity", "finite_chain"};
    static const std::set<std::string> observations{"linear_quadratic", "constant", "factor"};
    if (!kernels.count(m.kernel)) fail(line("model.kernel"), "unknown kernel '" + m.kernel + "'");
    if (!observations.count(m.observation))
        fail(line("model.observation"), "unknown observation '" + m.observation + "'");
    if (m.N < 1) fail(line("model.N"), "'N' must be at least 1");
    if (m.lower.empty() || m.lower.size() != m.upper.size())
        fail(line("model.upper"), "'lower' and 'upper' must have the same nonzero length");
    for (std::size_t i = 0; i < m.lower.size(); ++i)
        if (!(m.lower[i] < m.upper[i])) fail(line("model.upper"), "'lower' must be below 'upper' in every coordinate");
    if (!(m.step_sd > 0)) fail(line("model.step_sd"), "'step_sd' must be positive");
    if (!(m.sigma_xi_sq > 0)) fail(line("model.sigma_xi_sq"), "'sigma_xi_sq' must be positive");
    if (!(m.obs_scale > 0)) fail(line("model.obs_scale"), "'obs_scale' must be positive");
    if (m.beta < 0) fail(line("model.beta"), "'beta' must be nonnegative");
    if (m.states_per_dim < 1) fail(line("model.states_per_dim"), "'states_per_dim' must be positive");
    if (m.stay < 0 || m.stay > 1) fail(line("model.stay"), "'stay' must lie in [0, 1]");
    if (!(m.factor_scale > 0)) fail(line("model.factor_scale"), "'factor_scale' must be positive");
    const auto& e = c.experiment;
    if (e.T < 0) fail(line("experiment.T"), "'T' must be nonnegative");
    if (e.resolutions.empty()) fail(line("experiment.resolutions"), "'resolutions' must not be empty");
    for (std::size_t i = 0; i < e.resolutions.size(); ++i)
        if (e.resolutions[i] < 1 || (i > 0 && e.resolutions[i] <= e.resolutions[i - 1]))
            fail(line("experiment.resolutions"), "'resolutions' must be positive and strictly increasing");
    if (e.n_traj < 1) fail(line("experiment.n_traj"), "'n_traj' must be positive");
    if (!(e.C >= 1)) fail(line("experiment.C"), "'C' must be at least 1");
    if (e.A_ref < 0) fail(line("experiment.A_ref"), "'A_ref' must be nonnegative");
    if (e.n_probe < 2) fail(line("experiment.n_probe"), "'n_probe' must be at least 2");
    if (e.n_pairs < 1) fail(line("experiment.n_pairs"), "'n_pairs' must be positive");
    if (e.n_trials < 1) fail(line("experiment.n_trials"), "'n_trials' must be positive");
    if (e.n_concentration < 1) fail(line("experiment.n_concentration"), "'n_concentration' must be positive");
    if (e.gamma && !(*e.gamma > 0)) fail(line("experiment.gamma"), "'gamma' must be positive");
    if (e.workers < 1) fail(line("experiment.workers"), "'workers' must be positive");
    const auto& f = c.filter;
    if (f.resolution < 1) fail(line("filter.resolution"), "'resolution' must be positive");
    static const std::set<std::string> builds{"auto", "quadrature", "monte_carlo", "exact"};
    if (!builds.count(f.build)) fail(line("filter.build"), "unknown build '" + f.build + "'");
    if (f.mc_samples < 1) fail(line("filter.mc_samples"), "'mc_samples' must be positive");
    static const std::set<int> orders{2, 3, 4, 5, 6, 7, 8, 10, 15, 20};
    if (!orders.count(f.quad_order)) fail(line("filter.quad_order"), "unsupported 'quad_order'");
    if (c.output_dir.empty()) fail(line("output.dir"), "'dir' must not be empty");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, const Field*> index;
    for (const auto& f : fields()) index[f.section + "." + f.key] = &f;
    static const std::set<std::string> sections{"model", "constants", "experiment", "filter", "output"};

    std::map<std::string, long> seen;
    std::istringstream is(text);
    std::string raw, section;
    long lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(lineno, "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!sections.count(section)) fail(lineno, "unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(lineno, "expected 'key = value'");
        if (section.empty()) fail(lineno, "key outside of any section");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        std::string full = section + "." + key;
        auto it = index.find(full);
        if (it == index.end()) fail(lineno, "unknown key '" + full + "'");
        if (seen.count(full)) fail(lineno, "duplicate key '" + full + "'");
        if (value.empty()) fail(lineno, "empty value for '" + full + "'");
        it->second->set(cfg, value, lineno);
        seen[full] = lineno;
    }
    for (const auto& f : fields())
        if (f.required && !seen.count(f.section + "." + f.key))
            fail(0, "missing required field '" + f.section + "." + f.key + "'");
    cfg.model.M = static_cast<int>(cfg.model.lower.size());
    cfg.model.horizon = cfg.experiment.T;
    validate(cfg, seen);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const auto& f : fields()) {
        auto v = f.get(cfg);
        if (f.section != section) {
            if (!section.empty()) os << "\n";
            os << "[" << f.section << "]\n";
            section = f.section;
        }
        if (v) os << f.key << " = " << *v << "\n";
    }
    return os.str();
}

AssumptionConstants resolved_constants(const RunConfig& cfg) {
    AssumptionConstants c = analytic_constants(cfg.model);
    const auto& d = cfg.constants;
    if (d.lambda_inf) c.lambda_inf = *d.lambda_inf;
    if (d.lambda_sup) c.lambda_sup = *d.lambda_sup;
    if (d.mu_sup) c.mu_sup = *d.mu_sup;
    if (d.K_mu) c.K_mu = *d.K_mu;
    if (d.K_sigma) c.K_sigma = *d.K_sigma;
    return c;
}

SystemSpec make_system(const RunConfig& cfg) { return make_system(cfg.model, resolved_constants(cfg)); }

Metadata config_echo(const RunConfig& cfg) {
    Metadata m;
    for (const auto& f : fields())
        if (auto v = f.get(cfg)) m.emplace_back("config." + f.section + "." + f.key, *v);
    return m;
}

}  // namespace cmf
