#include "pseudobath/cli_runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "pseudobath/bath_models.hpp"
#include "pseudobath/bcf_engine.hpp"
#include "pseudobath/errors.hpp"
#include "pseudobath/gaussian_dynamics.hpp"
#include "pseudobath/heisenberg_propagator.hpp"
#include "pseudobath/linalg_core.hpp"
#include "pseudobath/spectral_extraction.hpp"

namespace pseudobath {

using nlohmann::json;
namespace fs = std::filesystem;

std::string library_version() { return PSEUDOBATH_VERSION; }

json ValidationReport::to_json() const
{
    return json{{"valid", valid},
                {"errors", errors},
                {"warnings", warnings},
                {"recurrence_horizon", recurrence_horizon},
                {"memory_estimate_bytes", memory_estimate_bytes},
                {"resolved", resolved}};
}

namespace {

const std::vector<std::string> kTasks{"bcf", "bcf-heisenberg", "extract-sd", "dynamics"};

struct Resolved {
    OhmicSD sd{1.0, 1.0};
    std::size_t n_modes = 0;
    double omega_min = 0.0, omega_max = 0.0, temperature = 0.0;
    double omega_pm = 0.0;
    cplx g;
    std::optional<double> omega_sys;
    double n_sys0 = 0.0;
    std::string task;
    std::vector<InitialStateKind> kinds;
    BCFPart part = BCFPart::Full;
    bool normalized = true;
    std::vector<double> t_grid, tprime_grid;
    double ds = 0.005;
    std::string propagator = "embedding";
    std::optional<double> dt;
    double t_cm = 130.0, dtau = 0.1;
    std::optional<double> window;
    WindowType window_type = WindowType::Rectangular;
    double omega_floor = 0.0;
    EigMethod eig_method = EigMethod::Auto;
    bool allow_beyond = false;
    std::string prefix;
};

// Collects field-level problems while reading a scenario.
class Reader {
public:
    std::vector<std::string> errors;

    void error(const std::string& field, const std::string& msg) { errors.push_back(field + ": " + msg); }

    const json* find(const json& obj, const std::string& key) const
    {
        if (!obj.is_object()) return nullptr;
        auto it = obj.find(key);
        return it == obj.end() || it->is_null() ? nullptr : &*it;
    }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& path, bool required)
    {
        const json* v = find(obj, key);
        if (!v) {
            if (required) error(path, "missing required field");
            return std::nullopt;
        }
        if (!v->is_number()) {
            error(path, "expected a number");
            return std::nullopt;
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) {
            error(path, "must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::string> string(const json& obj, const std::string& key, const std::string& path, bool required)
    {
        const json* v = find(obj, key);
        if (!v) {
            if (required) error(path, "missing required field");
            return std::nullopt;
        }
        if (!v->is_string()) {
            error(path, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& key, const std::string& path)
    {
        const json* v = find(obj, key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) {
            error(path, "expected true or false");
            return std::nullopt;
        }
        return v->get<bool>();
    }

    // {start, stop, step} or an explicit array of non-negative ascending times.
    std::vector<double> grid(const json& obj, const std::string& key, const std::string& path, bool required)
    {
        const json* v = find(obj, key);
        if (!v) {
            if (required) error(path, "missing required field");
            return {};
        }
        std::vector<double> out;
        if (v->is_array()) {
            for (const auto& x : *v) {
                if (!x.is_number() || !std::isfinite(x.get<double>())) {
                    error(path, "array entries must be finite numbers");
                    return {};
                }
                out.push_back(x.get<double>());
            }
        } else if (v->is_object()) {
            const auto start = number(*v, "start", path + ".start", false).value_or(0.0);
            const auto stop = number(*v, "stop", path + ".stop", true);
            const auto step = number(*v, "step", path + ".step", true);
            if (!stop || !step) return {};
            if (*step <= 0.0) {
                error(path + ".step", "must be positive");
                return {};
            }
            if (*stop < start) {
                error(path + ".stop", "must not be below start");
                return {};
            }
            const double count = (*stop - start) / *step;
            const auto n = static_cast<long long>(std::llround(count));
            if (std::abs(count - static_cast<double>(n)) > 1e-9 * std::max(1.0, count)) {
                error(path, "(stop - start) must be an integer multiple of step");
                return {};
            }
            if (n > 50'000'000) {
                error(path, "too many points");
                return {};
            }
            out.resize(static_cast<std::size_t>(n) + 1);
            for (long long k = 0; k <= n; ++k) out[static_cast<std::size_t>(k)] = start + static_cast<double>(k) * *step;
        } else {
            error(path, "expected {start, stop, step} or an array");
            return {};
        }
        if (out.empty()) error(path, "grid is empty");
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i] < 0.0) {
                error(path, "times must be non-negative");
                return {};
            }
            if (i > 0 && out[i] <= out[i - 1]) {
                error(path, "times must be strictly ascending");
                return {};
            }
        }
        return out;
    }
};

json grid_json(const std::vector<double>& g) { return json(g); }

// Parses and resolves; fills the report's errors and resolved JSON.
std::optional<Resolved> resolve(const json& sc, ValidationReport& rep)
{
    Reader rd;
    Resolved r;
    if (!sc.is_object()) {
        rep.valid = false;
        rep.errors.push_back("scenario: expected a JSON object");
        return std::nullopt;
    }
    if (const json* v = rd.find(sc, "schema_version")) {
        if (!v->is_number_integer() || v->get<int>() != kScenarioSchemaVersion)
            rd.error("schema_version", "unsupported (expected " + std::to_string(kScenarioSchemaVersion) + ")");
    }

    const json empty = json::object();
    const json* bath = rd.find(sc, "bath");
    if (!bath) rd.error("bath", "missing required field");
    else if (!bath->is_object()) rd.error("bath", "expected an object");
    const json& b = bath && bath->is_object() ? *bath : empty;
    const auto eta = rd.number(b, "eta", "bath.eta", true);
    const auto lambda_c = rd.number(b, "lambda_c", "bath.lambda_c", false).value_or(1.0);
    const auto n_modes = rd.number(b, "n_modes", "bath.n_modes", true);
    r.omega_min = rd.number(b, "omega_min", "bath.omega_min", false).value_or(0.002);
    r.omega_max = rd.number(b, "omega_max", "bath.omega_max", false).value_or(10.0);
    const auto temp = rd.number(b, "temperature", "bath.temperature", true);
    if (eta && *eta <= 0.0) rd.error("bath.eta", "must be positive");
    if (lambda_c <= 0.0) rd.error("bath.lambda_c", "must be positive");
    if (n_modes) {
        if (*n_modes != std::floor(*n_modes) || *n_modes < 2.0) rd.error("bath.n_modes", "must be an integer >= 2");
        else if (*n_modes > 100000.0) rd.error("bath.n_modes", "must not exceed 100000");
        else r.n_modes = static_cast<std::size_t>(*n_modes);
    }
    if (r.omega_min <= 0.0) rd.error("bath.omega_min", "must be positive");
    if (r.omega_max <= r.omega_min) rd.error("bath.omega_max", "must exceed omega_min");
    if (temp && *temp < 0.0) rd.error("bath.temperature", "must be non-negative");
    if (eta && *eta > 0.0 && lambda_c > 0.0) r.sd = OhmicSD(*eta, lambda_c);
    r.temperature = temp.value_or(0.0);

    const json* pm = rd.find(sc, "pm");
    if (!pm) rd.error("pm", "missing required field");
    const json& p = pm && pm->is_object() ? *pm : empty;
    if (pm && !pm->is_object()) rd.error("pm", "expected an object");
    const auto omega_pm = rd.number(p, "omega", "pm.omega", true);
    if (omega_pm && *omega_pm <= 0.0) rd.error("pm.omega", "must be positive");
    r.omega_pm = omega_pm.value_or(1.0);
    if (const json* g = rd.find(p, "g")) {
        if (g->is_number()) r.g = g->get<double>();
        else if (g->is_array() && g->size() == 2 && (*g)[0].is_number() && (*g)[1].is_number())
            r.g = cplx((*g)[0].get<double>(), (*g)[1].get<double>());
        else rd.error("pm.g", "expected a number or [re, im]");
    } else if (pm) {
        rd.error("pm.g", "missing required field");
    }

    const json& s = rd.find(sc, "system") ? sc["system"] : empty;
    r.omega_sys = rd.number(s, "omega_sys", "system.omega_sys", false);
    r.n_sys0 = rd.number(s, "n_sys0", "system.n_sys0", false).value_or(0.0);
    if (r.omega_sys && *r.omega_sys <= 0.0) rd.error("system.omega_sys", "must be positive");
    if (r.n_sys0 < 0.0) rd.error("system.n_sys0", "must be non-negative");

    r.task = rd.string(sc, "task", "task", true).value_or("");
    if (!r.task.empty() && std::find(kTasks.begin(), kTasks.end(), r.task) == kTasks.end())
        rd.error("task", "unknown task '" + r.task + "' (expected bcf|bcf-heisenberg|extract-sd|dynamics)");

    const json& par = rd.find(sc, "params") ? sc["params"] : empty;
    if (const json* k = rd.find(par, "kinds")) {
        if (!k->is_array() || k->empty()) rd.error("params.kinds", "expected a non-empty array");
        else
            for (const auto& x : *k) {
                try {
                    r.kinds.push_back(parse_initial_state(x.is_string() ? x.get<std::string>() : ""));
                } catch (const ConfigError&) {
                    rd.error("params.kinds", "entries must be 'factorizing' or 'diagonal'");
                    break;
                }
            }
    } else {
        r.kinds = {InitialStateKind::Factorizing, InitialStateKind::Diagonal};
    }
    if (auto part = rd.string(par, "part", "params.part", false)) {
        try {
            r.part = parse_bcf_part(*part);
        } catch (const ConfigError&) {
            rd.error("params.part", "expected alpha|alpha1|alpha2");
        }
    }
    r.normalized = rd.boolean(par, "normalized", "params.normalized").value_or(true);
    if (auto m = rd.string(sc, "eig_method", "eig_method", false)) {
        if (*m == "auto") r.eig_method = EigMethod::Auto;
        else if (*m == "dense") r.eig_method = EigMethod::Dense;
        else if (*m == "arrowhead") r.eig_method = EigMethod::Arrowhead;
        else rd.error("eig_method", "expected auto|dense|arrowhead");
    }
    r.allow_beyond = rd.boolean(sc, "allow_beyond_recurrence", "allow_beyond_recurrence").value_or(false);

    json out_json = rd.find(sc, "output") ? sc["output"] : json::object();
    r.prefix = rd.string(out_json, "prefix", "output.prefix", false).value_or(r.task.empty() ? "run" : r.task);
    if (r.prefix.empty() || r.prefix.find('/') != std::string::npos)
        rd.error("output.prefix", "must be a non-empty file name without '/'");

    json params = json::object();
    params["kinds"] = json::array();
    for (auto k : r.kinds) params["kinds"].push_back(std::string(to_string(k)));

    if (r.task == "bcf" || r.task == "bcf-heisenberg") {
        r.t_grid = rd.grid(par, "t_grid", "params.t_grid", true);
        r.tprime_grid = rd.grid(par, "tprime", "params.tprime", false);
        if (!rd.find(par, "tprime")) r.tprime_grid = {0.0};
        params["t_grid"] = grid_json(r.t_grid);
        params["tprime"] = grid_json(r.tprime_grid);
        params["part"] = std::string(to_string(r.part));
        params["normalized"] = r.normalized;
    }
    if (r.task == "bcf-heisenberg") {
        r.ds = rd.number(par, "ds", "params.ds", false).value_or(0.005);
        if (r.ds <= 0.0) rd.error("params.ds", "must be positive");
        r.propagator = rd.string(par, "propagator", "params.propagator", false).value_or("embedding");
        if (r.propagator != "embedding" && r.propagator != "direct")
            rd.error("params.propagator", "expected embedding|direct");
        r.dt = rd.number(par, "dt", "params.dt", false);
        if (r.propagator == "direct" && !r.dt) r.dt = 0.1 / std::max(r.omega_pm, r.omega_max);
        params["ds"] = r.ds;
        params["propagator"] = r.propagator;
        if (r.dt) params["dt"] = *r.dt;
        if (r.part != BCFPart::Full) rd.error("params.part", "bcf-heisenberg computes the full BCF only");
        for (const auto* g : {&r.t_grid, &r.tprime_grid})
            for (double t : *g) {
                const double k = t / r.ds;
                if (r.ds > 0.0 && std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
                    rd.error(g == &r.t_grid ? "params.t_grid" : "params.tprime", "times must be multiples of ds");
                    break;
                }
            }
    }
    if (r.task == "extract-sd") {
        r.t_cm = rd.number(par, "t_cm", "params.t_cm", false).value_or(130.0);
        r.dtau = rd.number(par, "dtau", "params.dtau", false).value_or(0.1);
        r.window = rd.number(par, "window", "params.window", false);
        if (auto w = rd.string(par, "window_type", "params.window_type", false)) {
            try {
                r.window_type = parse_window(*w);
            } catch (const ConfigError&) {
                rd.error("params.window_type", "expected rectangular|hann");
            }
        }
        r.omega_floor = rd.number(par, "omega_floor", "params.omega_floor", false).value_or(r.omega_min);
        if (r.t_cm <= 0.0) rd.error("params.t_cm", "must be positive");
        if (r.dtau <= 0.0) rd.error("params.dtau", "must be positive");
        if (r.window && *r.window <= 0.0) rd.error("params.window", "must be positive");
        if (r.omega_floor <= 0.0) rd.error("params.omega_floor", "must be positive");
        params["t_cm"] = r.t_cm;
        params["dtau"] = r.dtau;
        params["window"] = r.window ? json(*r.window) : json("default");
        params["window_type"] = std::string(to_string(r.window_type));
        params["omega_floor"] = r.omega_floor;
    }
    if (r.task == "dynamics") {
        if (!r.omega_sys) rd.error("system.omega_sys", "missing required field for task 'dynamics'");
        r.t_grid = rd.grid(par, "t_grid", "params.t_grid", true);
        params["t_grid"] = grid_json(r.t_grid);
    }

    json resolved{{"schema_version", kScenarioSchemaVersion},
                  {"bath",
                   {{"eta", eta.value_or(0.0)},
                    {"lambda_c", lambda_c},
                    {"n_modes", r.n_modes},
                    {"omega_min", r.omega_min},
                    {"omega_max", r.omega_max},
                    {"temperature", r.temperature}}},
                  {"pm", {{"omega", r.omega_pm}, {"g", json::array({r.g.real(), r.g.imag()})}}},
                  {"task", r.task},
                  {"params", params},
                  {"eig_method", r.eig_method == EigMethod::Auto    ? "auto"
                                 : r.eig_method == EigMethod::Dense ? "dense"
                                                                    : "arrowhead"},
                  {"allow_beyond_recurrence", r.allow_beyond},
                  {"output", {{"prefix", r.prefix}}}};
    if (r.omega_sys) resolved["system"] = {{"omega_sys", *r.omega_sys}, {"n_sys0", r.n_sys0}};
    rep.resolved = resolved;

    // Recurrence horizon and memory only make sense for a well-formed bath.
    if (rd.errors.empty()) {
        const auto bath_grid = discretize(r.sd, r.n_modes, r.omega_min, r.omega_max);
        rep.recurrence_horizon = bath_grid.recurrence_horizon();
        double t_max = 0.0;
        std::string what;
        auto consider = [&](double t, const std::string& field) {
            if (t > t_max) {
                t_max = t;
                what = field;
            }
        };
        if (!r.t_grid.empty()) consider(r.t_grid.back(), "params.t_grid");
        if (!r.tprime_grid.empty()) consider(r.tprime_grid.back(), "params.tprime");
        if (r.task == "extract-sd") {
            // The full record length must fit inside the horizon.
            if (r.window) consider(*r.window, "params.window");
            for (auto k : r.kinds)
                if (k == InitialStateKind::Factorizing) consider(r.t_cm * 2.0, "params.t_cm");
        }
        if (t_max > rep.recurrence_horizon) {
            const std::string msg = what + ": time " + format_double(t_max) + " exceeds the recurrence horizon " +
                                    format_double(rep.recurrence_horizon) + " of the discretized bath";
            if (r.allow_beyond) rep.warnings.push_back(msg + " (allowed by allow_beyond_recurrence)");
            else rd.error(what, "exceeds the recurrence horizon " + format_double(rep.recurrence_horizon) +
                                    " (set allow_beyond_recurrence to override)");
        }
        const double d = static_cast<double>(r.n_modes) + (r.task == "dynamics" ? 2.0 : 1.0);
        double bytes = 3.0 * 16.0 * d * d; // eigenvectors plus solver workspace
        if (r.task == "dynamics") bytes += 2.0 * 16.0 * d * d;
        if (r.task == "bcf-heisenberg" && r.ds > 0.0) {
            double t_end = 0.0;
            if (!r.t_grid.empty()) t_end = std::max(t_end, r.t_grid.back());
            if (!r.tprime_grid.empty()) t_end = std::max(t_end, r.tprime_grid.back());
            bytes += 16.0 * (t_end / r.ds + 1.0) * static_cast<double>(r.n_modes);
        }
        if (r.task == "bcf" || r.task == "bcf-heisenberg")
            bytes += 16.0 * static_cast<double>(r.t_grid.size()) * static_cast<double>(r.tprime_grid.size());
        rep.memory_estimate_bytes = static_cast<std::uint64_t>(bytes);
        if (r.n_modes > 20000 && r.eig_method == EigMethod::Dense)
            rep.warnings.push_back("eig_method: dense solve at this size needs about " +
                                   std::to_string(rep.memory_estimate_bytes >> 20) + " MiB");
    }

    rep.errors = rd.errors;
    rep.valid = rep.errors.empty();
    if (!rep.valid) return std::nullopt;
    return r;
}

std::string hex64(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Eigensystem through the optional on-disk cache; a corrupt entry is recomputed and replaced.
EigenSystem cached_eig(const HermitianMatrix& m, EigMethod method, json& diag, const std::string& label)
{
    const fs::path dir = eigen_cache_dir();
    const std::uint64_t hash = m.content_hash();
    if (dir.empty()) return eig_hermitian(m, method);
    const fs::path file = dir / ("eig-" + hex64(hash) + ".pbeig");
    if (fs::exists(file)) {
        try {
            auto e = load_eigensystem(file, hash);
            diag["eigen_cache"][label] = "hit";
            return e;
        } catch (const NumericError&) {
            diag["eigen_cache"][label] = "corrupt entry replaced";
        }
    }
    auto e = eig_hermitian(m, method);
    std::error_code ec;
    fs::create_directories(dir, ec);
    save_eigensystem(e, file, hash);
    if (!diag["eigen_cache"].contains(label)) diag["eigen_cache"][label] = "stored";
    return e;
}

struct Writer {
    fs::path out_dir;
    std::string manifest_name;
    std::vector<fs::path> files;

    void write(const std::string& name, const std::string& content)
    {
        const fs::path path = out_dir / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ConfigError("output: cannot open '" + path.string() + "' for writing");
        os << content;
        if (!os) throw NumericError("output: write to '" + path.string() + "' failed");
        files.push_back(path);
    }
};

CsvHeader base_header(const Resolved& r, const std::string& manifest)
{
    CsvHeader h;
    h.add("manifest", manifest);
    h.add("task", r.task);
    h.add("eta", r.sd.eta());
    h.add("lambda_c", r.sd.lambda_c());
    h.add("n_modes", std::to_string(r.n_modes));
    h.add("omega_min", r.omega_min);
    h.add("omega_max", r.omega_max);
    h.add("temperature", r.temperature);
    h.add("omega_pm", r.omega_pm);
    h.add("g_re", r.g.real());
    h.add("g_im", r.g.imag());
    if (r.omega_sys) h.add("omega_sys", *r.omega_sys);
    return h;
}

void run_bcf(const Resolved& r, const DiscretizedBath& bath, const PseudomodeConfig& pm, const ThermalParams& th,
             Writer& w, json& diag)
{
    const auto eig = cached_eig(build_pm_bath_matrix(pm, bath), r.eig_method, diag, "pm_bath");
    const double horizon = bath.recurrence_horizon();
    std::optional<PropagatorTable> prop;
    if (r.task == "bcf-heisenberg") {
        const double t_end = std::max(r.t_grid.back(), r.tprime_grid.back());
        const auto steps = static_cast<std::size_t>(std::llround(t_end / r.ds));
        std::vector<double> grid(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k) grid[k] = r.ds * static_cast<double>(k);
        prop = r.propagator == "direct" ? propagator_direct(pm, bath, grid, *r.dt)
                                        : propagator_embedding(pm, bath, grid, r.eig_method);
    }
    for (auto kind : r.kinds) {
        BCFGrid g;
        const BCFOptions opt{r.part, r.normalized};
        if (prop) {
            g = kind == InitialStateKind::Factorizing
                    ? bcf_factorizing_via_U(*prop, bath, pm, th, r.t_grid, r.tprime_grid, r.ds, opt)
                    : bcf_diagonal_via_U(*prop, eig, bath, pm, th, r.t_grid, r.tprime_grid, r.ds, opt);
        } else {
            g = bcf_components(kind, r.part, eig, bath, pm, th, r.t_grid, r.tprime_grid, r.normalized);
        }
        g.beyond_recurrence = g.beyond_recurrence || r.t_grid.back() > horizon || r.tprime_grid.back() > horizon;
        CsvHeader h = base_header(r, w.manifest_name);
        h.add("kind", std::string(to_string(kind)));
        if (prop) h.add("propagator", r.propagator);
        std::ostringstream os;
        write_bcf_csv(os, g, h);
        const std::string stem = r.task == "bcf" ? "_bcf_" : "_bcf_heisenberg_";
        w.write(r.prefix + stem + std::string(to_string(kind)) + ".csv", os.str());
        if (kind == InitialStateKind::Factorizing && !r.t_grid.empty() && r.t_grid.front() == 0.0 &&
            r.tprime_grid.front() == 0.0)
            diag["alpha_00_factorizing"] = g.at(0, 0).real();
        diag["max_abs_" + std::string(to_string(kind))] = g.max_abs();
    }
}

void run_extract(const Resolved& r, const DiscretizedBath& bath, const PseudomodeConfig& pm, const ThermalParams& th,
                 Writer& w, json& diag)
{
    const auto eig = cached_eig(build_pm_bath_matrix(pm, bath), r.eig_method, diag, "pm_bath");
    const double horizon = bath.recurrence_horizon();
    const bool has_fact =
        std::find(r.kinds.begin(), r.kinds.end(), InitialStateKind::Factorizing) != r.kinds.end();

    double window = 0.0;
    if (r.window) {
        window = *r.window;
    } else {
        // Default from the stationary BCF, shared by all kinds so the outputs are comparable.
        const double tau_span = std::isfinite(horizon) ? horizon / 4.0 : 2000.0;
        const auto n = static_cast<std::size_t>(std::floor(tau_span / r.dtau)) + 1;
        std::vector<double> tau(n);
        for (std::size_t k = 0; k < n; ++k) tau[k] = r.dtau * static_cast<double>(k);
        const auto probe = bcf_diagonal(eig, pm, th, tau);
        std::vector<cplx> s(probe.values.data(), probe.values.data() + probe.values.size());
        window = default_window(s, r.dtau, horizon);
        if (has_fact) window = std::min(window, 4.0 * r.t_cm);
    }
    diag["window"] = window;

    const auto n_tau = static_cast<std::size_t>(std::floor(window / 2.0 / r.dtau + 1e-9)) + 1;
    std::vector<double> tau(n_tau);
    for (std::size_t k = 0; k < n_tau; ++k) tau[k] = r.dtau * static_cast<double>(k);
    const FourierOptions fo{window, r.window_type, horizon};
    for (auto kind : r.kinds) {
        const BCFOptions opt{BCFPart::Full, false};
        const BCFGrid g = kind == InitialStateKind::Factorizing
                              ? bcf_factorizing_cm(eig, bath, pm, th, r.t_cm, tau, opt)
                              : bcf_diagonal(eig, pm, th, tau, opt);
        const auto alpha = bcf_fourier(g, fo);
        const auto j = extract_sd(alpha, th, r.omega_floor);
        CsvHeader h = base_header(r, w.manifest_name);
        h.add("kind", std::string(to_string(kind)));
        h.add("dtau", r.dtau);
        std::ostringstream os;
        write_spectral_csv(os, j, h);
        w.write(r.prefix + "_sd_" + std::string(to_string(kind)) + ".csv", os.str());

        json peaks = json::array();
        for (auto i : find_peaks(j)) peaks.push_back({{"omega", j.omega_grid[i]}, {"J", j.values[i]}});
        const std::string k(to_string(kind));
        diag[k] = {{"peaks", peaks},
                   {"integral_J", integrate(j)},
                   {"g_squared", pm.g_squared()},
                   {"detailed_balance_error", detailed_balance_error(alpha, th)},
                   {"noise_floor", j.noise_floor}};
    }
}

void run_dynamics(const Resolved& r, const DiscretizedBath& bath, const PseudomodeConfig& pm,
                  const ThermalParams& th, Writer& w, json& diag)
{
    const auto env = cached_eig(build_pm_bath_matrix(pm, bath), r.eig_method, diag, "pm_bath");
    const auto full = cached_eig(build_full_matrix(*r.omega_sys, pm, bath), r.eig_method, diag, "full");
    for (auto kind : r.kinds) {
        const auto c0 = initial_covariance(kind, *r.omega_sys, pm, bath, env, th, r.n_sys0);
        const auto traj = propagate_occupations(full, c0, r.t_grid, kind, bath.recurrence_horizon());
        CsvHeader h = base_header(r, w.manifest_name);
        h.add("n_sys0", r.n_sys0);
        std::ostringstream os;
        write_occupation_csv(os, traj, h);
        w.write(r.prefix + "_occupation_" + std::string(to_string(kind)) + ".csv", os.str());
        diag[std::string(to_string(kind))] = {{"n_sys_final", traj.n_sys.back()}, {"n_pm_final", traj.n_pm.back()}};
    }
}

} // namespace

ValidationReport validate_scenario(const json& scenario)
{
    ValidationReport rep;
    try {
        resolve(scenario, rep);
    } catch (const std::exception& e) {
        rep.valid = false;
        rep.errors.push_back(std::string("scenario: ") + e.what());
    }
    return rep;
}

RunResult run_scenario(const json& scenario, const fs::path& out_dir)
{
    const auto start = std::chrono::steady_clock::now();
    ValidationReport rep;
    const auto r = resolve(scenario, rep);
    if (!r) {
        std::string msg = "invalid scenario";
        for (const auto& e : rep.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw ConfigError("output: cannot create directory '" + out_dir.string() + "'");

    const auto bath = discretize(r->sd, r->n_modes, r->omega_min, r->omega_max);
    const PseudomodeConfig pm(r->omega_pm, r->g);
    const ThermalParams th(r->temperature);

    Writer w{out_dir, r->prefix + ".manifest.json", {}};
    json diag = json::object();
    if (r->task == "bcf" || r->task == "bcf-heisenberg") run_bcf(*r, bath, pm, th, w, diag);
    else if (r->task == "extract-sd") run_extract(*r, bath, pm, th, w, diag);
    else run_dynamics(*r, bath, pm, th, w, diag);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json outputs = json::array();
    for (const auto& f : w.files) outputs.push_back(f.filename().string());
    json manifest{{"schema_version", kManifestSchemaVersion},
                  {"library_version", library_version()},
                  {"units", "all quantities in units of lambda_c"},
                  {"resolved", rep.resolved},
                  {"recurrence_horizon", rep.recurrence_horizon},
                  {"memory_estimate_bytes", rep.memory_estimate_bytes},
                  {"warnings", rep.warnings},
                  {"outputs", outputs},
                  {"diagnostics", diag},
                  {"wall_time_s", wall}};
    if (std::isinf(rep.recurrence_horizon)) manifest["recurrence_horizon"] = "infinite";

    RunResult res;
    res.manifest = out_dir / w.manifest_name;
    {
        std::ofstream os(res.manifest, std::ios::binary);
        os << manifest.dump(2) << '\n';
        if (!os) throw NumericError("output: write to '" + res.manifest.string() + "' failed");
    }
    res.outputs = w.files;
    res.outputs.push_back(res.manifest);
    res.manifest_json = std::move(manifest);
    return res;
}

fs::path eigen_cache_dir()
{
    const char* v = std::getenv("PSEUDOBATH_CACHE_DIR");
    return v && *v ? fs::path(v) : fs::path();
}

namespace {

json fig_bath(double eta, int n_modes)
{
    return {{"eta", eta}, {"lambda_c", 1.0}, {"n_modes", n_modes}, {"omega_min", 0.002}, {"omega_max", 10.0},
            {"temperature", 46.0}};
}

json fig2(double eta, const std::string& prefix)
{
    return {{"schema_version", kScenarioSchemaVersion},
            {"bath", fig_bath(eta, 4000)},
            {"pm", {{"omega", 1.5}, {"g", 0.3}}},
            {"task", "bcf"},
            {"params",
             {{"kinds", {"factorizing", "diagonal"}},
              {"part", "alpha"},
              {"t_grid", {{"start", 0.0}, {"stop", 100.0}, {"step", 0.05}}},
              {"tprime", {0.0, 32.5}}}},
            {"output", {{"prefix", prefix}}}};
}

json fig3(double eta, const std::string& prefix)
{
    return {{"schema_version", kScenarioSchemaVersion},
            {"bath", fig_bath(eta, 4000)},
            {"pm", {{"omega", 1.5}, {"g", 0.3}}},
            {"task", "extract-sd"},
            {"params",
             {{"kinds", {"factorizing", "diagonal"}},
              {"t_cm", 130.0},
              {"dtau", 0.1},
              {"window", 520.0},
              {"window_type", "hann"}}},
            {"output", {{"prefix", prefix}}}};
}

json fig4(double g, const std::string& prefix)
{
    return {{"schema_version", kScenarioSchemaVersion},
            {"bath", fig_bath(1.0, 2000)},
            {"pm", {{"omega", 1.5}, {"g", g}}},
            {"system", {{"omega_sys", 0.46}, {"n_sys0", 0.0}}},
            {"task", "dynamics"},
            {"params", {{"kinds", {"factorizing", "diagonal"}}, {"t_grid", {{"start", 0.0}, {"stop", 300.0}, {"step", 0.25}}}}},
            {"output", {{"prefix", prefix}}}};
}

} // namespace

std::vector<std::string> preset_names() { return {"fig2a", "fig2b", "fig3", "fig3a", "fig3b", "fig4a", "fig4b"}; }

Preset get_preset(const std::string& name)
{
    const std::string fig2_common = "T=46, Omega=1.5, g=0.3, N=4000 on [0.002, 10], t' in {0, 32.5}, both kinds";
    const std::string fig3_common =
        "extract-sd at t_cm=130, T=46, Omega=1.5, g=0.3, N=4000, Hann window of length 520, both kinds";
    const std::string fig4_common =
        "dynamics, eta=1.0, Omega_sys=0.46, Omega=1.5, T=46, t in [0, 300] step 0.25, both kinds. "
        "DEVIATION: N=2000 bath modes instead of the figure's 4000 (runtime budget)";
    if (name == "fig2a") return {name, "BCF, eta=0.25, " + fig2_common, {fig2(0.25, "fig2a")}};
    if (name == "fig2b") return {name, "BCF, eta=1.0, " + fig2_common, {fig2(1.0, "fig2b")}};
    if (name == "fig3a") return {name, "eta=0.25, " + fig3_common, {fig3(0.25, "fig3a")}};
    if (name == "fig3b") return {name, "eta=1.0, " + fig3_common, {fig3(1.0, "fig3b")}};
    if (name == "fig3")
        return {name, "eta=0.25 and eta=1.0, " + fig3_common, {fig3(0.25, "fig3a"), fig3(1.0, "fig3b")}};
    if (name == "fig4a") return {name, "g=0.3, " + fig4_common, {fig4(0.3, "fig4a")}};
    if (name == "fig4b") return {name, "g=0.08, " + fig4_common, {fig4(0.08, "fig4b")}};
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : "|") + n;
    throw ConfigError("unknown preset '" + name + "' (expected " + known + ")");
}

} // namespace pseudobath
