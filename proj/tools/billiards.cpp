// Experiment runner: one subcommand per experiment, CSV series and JSON fit reports plus a
// manifest that `reproduce` re-runs and checks bit for bit.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "billiards/errors.hpp"
#include "billiards/stats.hpp"
#include "billiards/table_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace billiards;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { ok = 0, bad_config = 2, bad_geometry = 3, mismatch = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::map<std::string, std::string> kSchemas = {
    {"trajectory.csv", "step,component,r,phi,h"},
    {"returns.csv", "start_r,start_phi,n,cell,h_hat,g,end_r,end_phi,discarded_flag"},
    {"survival.csv", "n,survival,se"},
    {"cells.csv", "cell,count"},
    {"series.csv", "lag,rho,se"},
    {"holder.csv", "n,samples,pieces,modulus,oscillation,diameter,max_g,h_min,h_max"},
    {"variance.csv", "T,variance,se"},
    {"report.json", "validation report"},
    {"fit.json", "fit report"},
};

struct Config {
    std::string command;
    json table;  // path string or inline table document
    std::string section = "full";
    double delta = 0.0;
    std::optional<double> samples;
    double tmax = 100.0;
    int maxlag = 100;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out = "out";
    std::vector<double> horizons;
    std::optional<double> rho0;
    std::string observable = "cos_phi";
    double alpha = 0.25;
    std::vector<std::int64_t> cells;
    std::optional<double> nlow;
    double dt = 0.0;
};

json to_json(const Config& c)
{
    json j = {{"command", c.command}, {"table", c.table},   {"section", c.section}, {"delta", c.delta},
              {"tmax", c.tmax},       {"maxlag", c.maxlag}, {"seed", c.seed},       {"workers", c.workers},
              {"out", c.out},         {"horizons", c.horizons}, {"observable", c.observable},
              {"alpha", c.alpha},     {"cells", c.cells},   {"dt", c.dt}};
    j["samples"] = c.samples ? json(*c.samples) : json(nullptr);
    j["rho0"] = c.rho0 ? json(*c.rho0) : json(nullptr);
    j["nlow"] = c.nlow ? json(*c.nlow) : json(nullptr);
    return j;
}

template <class T>
void take(const json& j, const char* key, T& dst)
{
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

template <class T>
void take(const json& j, const char* key, std::optional<T>& dst)
{
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        dst.reset();
        return;
    }
    T v{};
    take(j, key, v);
    dst = v;
}

/// Fields present in `j` override `c`; unknown fields are rejected.
void apply_config(const json& j, Config& c)
{
    static const std::set<std::string> known = {"command", "table",    "section",    "delta", "samples",
                                                "tmax",    "maxlag",   "seed",       "workers", "out",
                                                "horizons", "rho0",    "observable", "alpha", "cells",
                                                "nlow",    "dt"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown config field '" + k + "'");
    std::string command = c.command;
    take(j, "command", command);
    if (!c.command.empty() && command != c.command)
        throw ConfigError("config is for '" + command + "', not '" + c.command + "'");
    c.command = command;
    if (j.contains("table")) {
        if (!j["table"].is_string() && !j["table"].is_object())
            throw ConfigError("config field 'table' must be a path or a table document");
        c.table = j["table"];
    }
    take(j, "section", c.section);
    take(j, "delta", c.delta);
    take(j, "samples", c.samples);
    take(j, "tmax", c.tmax);
    take(j, "maxlag", c.maxlag);
    take(j, "seed", c.seed);
    take(j, "workers", c.workers);
    take(j, "out", c.out);
    take(j, "horizons", c.horizons);
    take(j, "rho0", c.rho0);
    take(j, "observable", c.observable);
    take(j, "alpha", c.alpha);
    take(j, "cells", c.cells);
    take(j, "nlow", c.nlow);
    take(j, "dt", c.dt);
}

// ---------------------------------------------------------------------------

std::string git_blob_sha1(const std::string& bytes)
{
    const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, header.data(), header.size());
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& path, const std::string& header) : out_(path, std::ios::binary)
    {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        out_ << header << '\n';
    }
    template <class... T>
    void row(const T&... v)
    {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(v), first = false), ...);
        out_ << '\n';
    }

private:
    static std::string cell(double v) { return num(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    std::ofstream out_;
};

json fit_json(const FitReport& f)
{
    return {{"model", std::string(to_string(f.model))},
            {"exponent", f.model == DecayModel::power ? json(f.slope) : json(nullptr)},
            {"rate", f.model == DecayModel::exponential ? json(f.rate()) : json(nullptr)},
            {"slope", f.slope},
            {"slope_se", f.slope_se},
            {"ci", {f.ci_low, f.ci_high}},
            {"points", f.points},
            {"window", {f.x_low, f.x_high}},
            {"aic", f.aic}};
}

// ---------------------------------------------------------------------------

struct Run {
    Config cfg;
    std::shared_ptr<const BilliardTable> table;
    json table_input;  // path and content hash
    fs::path out;
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    std::int64_t discarded = 0;
    std::int64_t processed = 0;
    json extra = json::object();

    RunOptions run_options() const
    {
        RunOptions r;
        r.seed = cfg.seed;
        r.workers = cfg.workers;
        return r;
    }
    std::int64_t samples(double fallback) const
    {
        const double s = cfg.samples.value_or(fallback);
        if (!(s >= 1.0) || s != std::floor(s)) throw ConfigError("--samples must be a positive integer");
        return static_cast<std::int64_t>(s);
    }
    CrossSection section() const
    {
        SectionKind k;
        try {
            k = section_kind_from_string(cfg.section);
        } catch (const std::exception&) {
            throw ConfigError("unknown section '" + cfg.section + "'");
        }
        if (k == SectionKind::cusp && table->cusp_corner_indices().empty())
            throw ConfigError("cusp section on a table without cusps");
        return CrossSection::make(k, table, cfg.delta);
    }
    fs::path file(const std::string& name)
    {
        files.push_back(name);
        return out / name;
    }
    void write_json(const std::string& name, const json& j)
    {
        std::ofstream(file(name), std::ios::binary) << j.dump(2) << '\n';
    }
};

std::shared_ptr<const BilliardTable> load_table(const Config& cfg, json& input)
{
    json doc;
    if (cfg.table.is_string()) {
        const fs::path p = cfg.table.get<std::string>();
        if (!fs::exists(p)) throw ConfigError("table file not found: " + p.string());
        const std::string bytes = slurp(p);
        input = {{"path", fs::absolute(p).string()}, {"git_blob_sha1", git_blob_sha1(bytes)}};
        try {
            doc = json::parse(bytes);
        } catch (const json::parse_error& e) {
            throw ConfigError("table file is not valid JSON: " + std::string(e.what()));
        }
    } else if (cfg.table.is_object()) {
        doc = cfg.table;
        input = {{"inline", true}, {"git_blob_sha1", git_blob_sha1(doc.dump())}};
    } else {
        throw ConfigError("no table given (--table PATH)");
    }
    try {
        return std::make_shared<BilliardTable>(table_from_json(doc));
    } catch (const SpecError& e) {
        throw ConfigError(std::string("table document: ") + e.what());
    }
}

Observable map_observable(const Config& c)
{
    if (c.observable == "cos_phi") return cos_phi_observable();
    if (c.observable == "flat_wall") return flat_wall_observable();
    throw ConfigError("unknown map observable '" + c.observable + "' (cos_phi or flat_wall)");
}

Observable bump(Run& r)
{
    const Vec2 q0 = r.table->centroid();
    const double rho0 = r.cfg.rho0.value_or(0.4 * r.table->distance_to_boundary(q0));
    try {
        Observable v = Observable::bump(*r.table, q0, rho0);
        r.extra["observable"] = {{"kind", "bump"}, {"center", {q0.x, q0.y}}, {"rho0", rho0}};
        return v;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// ---------------------------------------------------------------------------

void simulate(Run& r)
{
    const std::int64_t n = r.samples(1000);
    const CrossSection s = r.section();
    StreamRng rng(r.cfg.seed, 0);
    {
        Csv csv(r.file("trajectory.csv"), kSchemas.at("trajectory.csv"));
        PhasePoint x = liouville_sample(*r.table, rng);
        Orbit orbit(*r.table, x, s.orbit_options());
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                const MapStep st = orbit.step();
                csv.row(i, x.component, x.r, x.phi, st.flight);
                x = st.next;
            } catch (const TrajectoryError& e) {
                ++r.discarded;
                r.warnings.push_back("trajectory restarted after step " + std::to_string(i) + ": " + e.what());
                x = liouville_sample(*r.table, rng);
                orbit = Orbit(*r.table, x, s.orbit_options());
            }
        }
    }
    Csv csv(r.file("returns.csv"), kSchemas.at("returns.csv"));
    PhasePoint x = section_sample(s, rng);
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            const ReturnRecord rec = induced_map(s, x);
            csv.row(rec.start.r, rec.start.phi, rec.n, rec.cell, rec.h_hat, rec.g, rec.end.r, rec.end.phi, 0);
            x = rec.end;
        } catch (const TrajectoryError&) {
            const double nan = std::nan("");
            csv.row(x.r, x.phi, std::int64_t{-1}, std::int64_t{-1}, nan, nan, nan, nan, 1);
            ++r.discarded;
            x = section_sample(s, rng);
        }
    }
    r.processed = 2 * n;
}

void tails(Run& r)
{
    const CrossSection s = r.section();
    TailOptions opt;
    opt.returns = r.samples(1e6);
    opt.run = r.run_options();
    const TailHistogram h = tail_distribution(s, opt);
    r.discarded = h.discarded;
    r.processed = h.returns();
    if (h.excessive_discards()) r.warnings.push_back("discard rate above 1e-3");
    {
        Csv csv(r.file("survival.csv"), kSchemas.at("survival.csv"));
        const DecaySeries sv = h.survival();
        for (size_t i = 0; i < sv.x.size(); ++i) csv.row(sv.x[i], sv.y[i], sv.se[i]);
    }
    {
        Csv csv(r.file("cells.csv"), kSchemas.at("cells.csv"));
        for (const auto& [cell, count] : h.cells) csv.row(cell, count);
    }
    const bool power_first = s.kind() == SectionKind::full || s.kind() == SectionKind::stadium;
    const double nlow = r.cfg.nlow.value_or(power_first ? 50.0 : 5.0);
    json fit = {{"seed", r.cfg.seed}, {"sample_size", h.returns()}, {"n_low", nlow}};
    try {
        const TailFit f = fit_tail(h, nlow);
        fit["preferred"] = fit_json(f.chosen);
        fit["power"] = fit_json(f.models.power);
        fit["exponential"] = fit_json(f.models.exponential);
        fit["exponent"] = f.models.power.slope;
        fit["jackknife_se"] = f.jackknife_se;
    } catch (const InsufficientData& e) {
        r.warnings.push_back(std::string("tail fit: ") + e.what());
        fit["exponent"] = nullptr;
    }
    r.write_json("fit.json", fit);
}

void write_series(Run& r, const CorrelationSeries& cs)
{
    Csv csv(r.file("series.csv"), kSchemas.at("series.csv"));
    for (size_t k = 0; k < cs.lag.size(); ++k) csv.row(cs.lag[k], cs.rho[k], cs.se[k]);
    r.discarded = cs.discarded;
    r.processed = cs.samples;
}

json envelope_fit(Run& r, const CorrelationSeries& cs, double lo, double hi)
{
    json fit = {{"seed", r.cfg.seed}, {"sample_size", cs.samples}, {"window", {lo, hi}}};
    try {
        const FitReport f = decay_fit(log_envelope(cs.decay(), lo, hi), DecayModel::power, lo, hi);
        fit["envelope_power"] = fit_json(f);
        fit["exponent"] = f.slope;
    } catch (const InsufficientData& e) {
        r.warnings.push_back(std::string("envelope fit: ") + e.what());
        fit["exponent"] = nullptr;
    }
    try {
        const ModelComparison m = compare_models(cs.decay(), lo, hi);
        fit["pointwise"] = {{"power", fit_json(m.power)},
                            {"exponential", fit_json(m.exponential)},
                            {"preferred", std::string(to_string(m.preferred))}};
    } catch (const InsufficientData& e) {
        r.warnings.push_back(std::string("pointwise fit: ") + e.what());
    }
    return fit;
}

void correlate_map(Run& r)
{
    if (r.cfg.maxlag < 10) throw ConfigError("--maxlag must be at least 10");
    MapCorrelationOptions opt;
    opt.collisions = r.samples(1e6);
    opt.max_lag = r.cfg.maxlag;
    opt.run = r.run_options();
    const Observable v = map_observable(r.cfg);
    const CorrelationSeries cs = map_correlation(r.section(), v, v, opt);
    write_series(r, cs);
    r.extra["observable"] = v.name();
    r.write_json("fit.json", envelope_fit(r, cs, r.cfg.maxlag / 10.0, r.cfg.maxlag));
}

void correlate_flow(Run& r)
{
    FlowCorrelationOptions opt;
    opt.total_time = static_cast<double>(r.samples(1e5));
    opt.t_max = r.cfg.tmax;
    opt.dt = r.cfg.dt;
    opt.run = r.run_options();
    if (!(r.cfg.tmax > 0.0)) throw ConfigError("--tmax must be positive");
    const Observable v = bump(r);
    CorrelationSeries cs;
    try {
        cs = flow_correlation(*r.table, v, v, opt);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    write_series(r, cs);
    const double lo = r.cfg.tmax / 10.0, hi = r.cfg.tmax;
    json fit = envelope_fit(r, cs, lo, hi);
    const FasterThanPowerCheck c = faster_than_power(cs.decay(), 2.0, lo, hi);
    fit["faster_than_t^-2"] = {{"passed", c.passed()},
                               {"resolved", c.significant_start},
                               {"envelope_ok", c.envelope_ok},
                               {"worst_excess_se", c.worst_excess},
                               {"fit_available", c.fit_available},
                               {"fitted_exponent", c.fit_available ? json(c.fitted_exponent) : json(nullptr)},
                               {"fitted_upper", c.fit_available ? json(c.fitted_upper) : json(nullptr)}};
    r.write_json("fit.json", fit);
}

void holder(Run& r)
{
    const CrossSection s = r.section();
    const int per_cell = static_cast<int>(r.samples(100));
    StreamRng rng(r.cfg.seed, 0);
    std::map<std::int64_t, std::vector<CellSample>> cells;
    std::vector<std::int64_t> ns = r.cfg.cells;
    if (s.kind() == SectionKind::cusp) {
        if (ns.empty()) ns = {50, 70, 100, 150, 200, 300, 500, 700, 1000};
        const int corner = r.table->cusp_corner_indices().front();
        const Corner& k = r.table->corners()[static_cast<size_t>(corner)];
        int facing = -1;
        if (r.table->component_count() == 3)
            for (int i = 0; i < 3; ++i)
                if (i != k.incoming && i != k.outgoing) facing = i;
        cells = cusp_cells(s, corner, ns, per_cell, rng, facing);
    } else if (s.kind() == SectionKind::flower || s.kind() == SectionKind::stadium) {
        if (ns.empty()) ns = {5, 7, 10, 14, 20, 30, 50, 70, 100, 140, 200};
        int arc = -1;
        for (int i = 0; i < r.table->component_count() && arc < 0; ++i)
            if (r.table->curvature_of(i) == Curvature::focusing) arc = i;
        if (arc < 0) throw ConfigError("table has no focusing arc");
        cells = flower_cells(s, arc, ns, per_cell, rng);
    } else {
        throw ConfigError("holder needs a flower, stadium or cusp section");
    }

    std::vector<double> n, modulus, osc, diam, gmax;
    Csv csv(r.file("holder.csv"), kSchemas.at("holder.csv"));
    for (const auto& [cell, pts] : cells) {
        try {
            const HolderEstimate e = holder_modulus(pts, r.cfg.alpha);
            double g = 0.0, lo = INFINITY, hi = -INFINITY;
            for (const auto& p : pts) {
                g = std::max(g, p.g);
                lo = std::min(lo, p.h_hat);
                hi = std::max(hi, p.h_hat);
            }
            csv.row(cell, e.samples, e.pieces, e.modulus, e.oscillation, e.diameter, g, lo, hi);
            n.push_back(std::log(static_cast<double>(cell)));
            modulus.push_back(std::log(e.modulus));
            osc.push_back(std::log(e.oscillation));
            diam.push_back(std::log(e.diameter));
            gmax.push_back(std::log(g));
            r.processed += e.samples;
        } catch (const InsufficientData&) {
            r.warnings.push_back("cell " + std::to_string(cell) + " has too few samples");
        }
    }
    json fit = {{"seed", r.cfg.seed}, {"alpha", r.cfg.alpha}, {"per_cell", per_cell}, {"cells", n.size()}};
    if (n.size() >= 3) {
        fit["modulus_exponent"] = least_squares(n, modulus).slope;
        fit["oscillation_exponent"] = least_squares(n, osc).slope;
        fit["diameter_exponent"] = least_squares(n, diam).slope;
        fit["interior_time_exponent"] = least_squares(n, gmax).slope;
    } else {
        r.warnings.push_back("fewer than 3 populated cells, no exponents");
    }
    r.write_json("fit.json", fit);
}

void variance(Run& r)
{
    VarianceOptions opt;
    opt.ensemble = r.samples(1000);
    opt.horizons = r.cfg.horizons.empty()
                       ? std::vector<double>{50, 100, 150, 200, 300, 400, 500, 600, 700, 800, 900, 1000}
                       : r.cfg.horizons;
    opt.run = r.run_options();
    VarianceGrowth g;
    try {
        g = variance_growth(*r.table, bump(r), opt);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    r.discarded = g.discarded;
    r.processed = g.ensemble;
    Csv csv(r.file("variance.csv"), kSchemas.at("variance.csv"));
    for (size_t i = 0; i < g.horizon.size(); ++i) csv.row(g.horizon[i], g.variance[i], g.se[i]);
    r.write_json("fit.json", {{"seed", r.cfg.seed},
                              {"sample_size", g.ensemble},
                              {"linear", {{"a", g.linear_a}, {"b", g.linear_b}, {"chi2", g.linear_chi2}}},
                              {"tlogt", {{"c", g.tlogt_c}, {"b", g.tlogt_b}, {"chi2", g.tlogt_chi2}}},
                              {"preferred", g.preferred},
                              {"discriminating", g.discriminating}});
}

// ---------------------------------------------------------------------------

int validate(const Config& cfg, std::ostream& log)
{
    json input;
    json doc;
    if (!cfg.table.is_string()) throw ConfigError("validate needs --table PATH");
    const fs::path p = cfg.table.get<std::string>();
    if (!fs::exists(p)) throw ConfigError("table file not found: " + p.string());
    try {
        doc = json::parse(slurp(p));
    } catch (const json::parse_error& e) {
        throw ConfigError("table file is not valid JSON: " + std::string(e.what()));
    }
    TableSpec spec;
    try {
        spec = table_spec_from_json(doc);
    } catch (const SpecError& e) {
        throw ConfigError(std::string("table document: ") + e.what());
    }
    const BilliardTable t = build_table(spec);  // TableError -> exit 3
    json report = {{"family", std::string(to_string(spec.family))},
                   {"components", t.component_count()},
                   {"length", t.length()},
                   {"area", t.area()},
                   {"diameter", t.diameter()},
                   {"mean_free_path", t.mean_free_path()},
                   {"corners", t.corners().size()},
                   {"cusps", t.cusp_corner_indices().size()}};
    const FlowerReport f = validate_flower_conditions(t);
    report["flower_conditions"] = {{"(i) no flat pieces", f.no_neutral},
                                   {"(ii) focusing arcs below a semicircle", f.focusing_below_semicircle},
                                   {"(iii) completed circles inside Q", f.circles_contained},
                                   {"(iv) no cusps", f.no_cusps},
                                   {"failures", f.failures}};
    const bool flower_ok = spec.family != Family::flower || f.ok();
    report["valid"] = flower_ok;
    log << report.dump(2) << '\n';
    fs::create_directories(cfg.out);
    std::ofstream(fs::path(cfg.out) / "report.json", std::ios::binary) << report.dump(2) << '\n';
    return flower_ok ? Exit::ok : Exit::bad_geometry;
}

json execute(const Config& cfg)
{
    Run r;
    r.cfg = cfg;
    r.table = load_table(cfg, r.table_input);
    r.out = cfg.out;
    if (cfg.workers < 1) throw ConfigError("--workers must be at least 1");
    fs::create_directories(r.out);

    const std::string& c = cfg.command;
    if (c == "simulate") simulate(r);
    else if (c == "tails") tails(r);
    else if (c == "correlate-map") correlate_map(r);
    else if (c == "correlate-flow") correlate_flow(r);
    else if (c == "holder") holder(r);
    else if (c == "variance") variance(r);
    else throw ConfigError("unknown command '" + c + "'");

    json outputs = json::object();
    for (const auto& f : r.files)
        outputs[f] = {{"git_blob_sha1", git_blob_sha1(slurp(r.out / f))}, {"schema", kSchemas.at(f)}};
    json manifest = {{"schema_version", kSchemaVersion},
                     {"config", to_json(cfg)},
                     {"inputs", {{"table", r.table_input}}},
                     {"outputs", outputs},
                     {"run", {{"seed", cfg.seed}, {"streams", RunOptions{}.streams}, {"workers", cfg.workers}}},
                     {"discards", {{"discarded", r.discarded}, {"processed", r.processed}}},
                     {"warnings", r.warnings}};
    if (!r.extra.empty()) manifest["details"] = r.extra;
    std::ofstream(r.out / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    return manifest;
}

int reproduce(const fs::path& manifest_path)
{
    if (!fs::exists(manifest_path)) throw ConfigError("manifest not found: " + manifest_path.string());
    json m;
    try {
        m = json::parse(slurp(manifest_path));
    } catch (const json::parse_error& e) {
        throw ConfigError("manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!m.contains("config") || !m.contains("outputs")) throw ConfigError("not a run manifest");
    if (m.value("schema_version", 0) != kSchemaVersion) throw ConfigError("unsupported manifest schema version");
    Config cfg;
    apply_config(m["config"], cfg);
    if (cfg.table.is_string()) {
        const auto& in = m["inputs"]["table"];
        if (!fs::exists(cfg.table.get<std::string>()) && in.contains("path")) cfg.table = in["path"];
    }
    const fs::path scratch = manifest_path.parent_path() / ".reproduce";
    fs::remove_all(scratch);
    cfg.out = scratch.string();
    const json again = execute(cfg);

    int status = Exit::ok;
    if (again["inputs"]["table"]["git_blob_sha1"] != m["inputs"]["table"]["git_blob_sha1"]) {
        std::cerr << "table input changed since the recorded run\n";
        status = Exit::mismatch;
    }
    for (const auto& [name, rec] : m["outputs"].items()) {
        if (!again["outputs"].contains(name)) {
            std::cerr << name << ": not produced by the rerun\n";
            status = Exit::mismatch;
        } else if (again["outputs"][name]["git_blob_sha1"] != rec["git_blob_sha1"]) {
            std::cerr << name << ": differs from the recorded run\n";
            status = Exit::mismatch;
        } else {
            std::cout << name << ": identical\n";
        }
    }
    if (again["outputs"].size() != m["outputs"].size()) status = Exit::mismatch;
    fs::remove_all(scratch);
    std::cout << (status == Exit::ok ? "reproduced" : "MISMATCH") << '\n';
    return status;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Billiard dynamics experiments"};
    app.require_subcommand(1);

    Config flags;
    std::string table_path, config_path, samples_text;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--table", table_path, "table document (JSON)");
        sub->add_option("--section", flags.section, "full|flower|cusp|stadium");
        sub->add_option("--delta", flags.delta, "cusp exclusion radius (0 = default)");
        sub->add_option("--samples", samples_text, "sample budget (collisions, returns, flow time, ...)");
        sub->add_option("--tmax", flags.tmax, "largest flow-correlation lag");
        sub->add_option("--maxlag", flags.maxlag, "largest map-correlation lag");
        sub->add_option("--seed", flags.seed, "RNG seed");
        sub->add_option("--workers", flags.workers, "OpenMP workers");
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--config", config_path, "JSON config; its fields override flags");
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "trajectory and induced-return dumps"},
        {"tails", "return-time survival function and tail fits"},
        {"correlate-map", "map correlations rho(n)"},
        {"correlate-flow", "flow correlations rho(t) of a bump observable"},
        {"holder", "Holder moduli of the induced roof on cells"},
        {"variance", "growth of Var(int_0^T v dt)"},
        {"validate", "table validation and flower conditions"},
    };
    for (const auto& [name, help] : commands) common(app.add_subcommand(name, help));
    std::string manifest_path;
    auto* rep = app.add_subcommand("reproduce", "rerun a manifest and compare outputs bit for bit");
    rep->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : Exit::bad_config;
    }

    try {
        if (rep->parsed()) return reproduce(manifest_path);
        flags.command = app.get_subcommands().front()->get_name();
        if (!table_path.empty()) flags.table = table_path;
        if (!samples_text.empty()) {
            try {
                size_t used = 0;
                flags.samples = std::stod(samples_text, &used);
                if (used != samples_text.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ConfigError("--samples expects a number, got '" + samples_text + "'");
            }
        }
        if (!config_path.empty()) {
            if (!fs::exists(config_path)) throw ConfigError("config file not found: " + config_path);
            json j;
            try {
                j = json::parse(slurp(config_path));
            } catch (const json::parse_error& e) {
                throw ConfigError("config is not valid JSON: " + std::string(e.what()));
            }
            apply_config(j, flags);
        }
        if (flags.command == "validate") return validate(flags, std::cout);
        const json m = execute(flags);
        for (const auto& w : m["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
        std::cout << "wrote " << (fs::path(flags.out) / "manifest.json").string() << '\n';
        return Exit::ok;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::bad_config;
    } catch (const TableError& e) {
        std::cerr << "geometry error: " << e.what() << '\n';
        return Exit::bad_geometry;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
