#include "cgibbs/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cg {

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& path, const std::string& what)
{
    throw SchemaError(where + ": " + (path.empty() ? "/" : path) + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& where, const std::string& path)
{
    if (!j.is_object()) schema_fail(where, path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema_fail(where, path + "/" + key, "missing field");
    return *it;
}

double number(const Json& j, const std::string& where, const std::string& path)
{
    if (!j.is_number()) schema_fail(where, path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema_fail(where, path, "expected a finite number");
    return v;
}

double number_or(const Json& j, const char* key, double fallback, const std::string& where, const std::string& path)
{
    if (!j.contains(key)) return fallback;
    return number(j[key], where, path + "/" + key);
}

std::uint64_t count(const Json& j, const std::string& where, const std::string& path)
{
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) schema_fail(where, path, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

std::uint64_t count_or(const Json& j, const char* key, std::uint64_t fallback, const std::string& where,
                       const std::string& path)
{
    if (!j.contains(key)) return fallback;
    return count(j[key], where, path + "/" + key);
}

std::vector<Particle> particles_from_json(const Json& j, const std::string& where, const std::string& path)
{
    if (!j.is_array()) schema_fail(where, path, "expected an array of [x0, x1, spin]");
    std::vector<Particle> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        const Json& e = j[i];
        if (!e.is_array() || e.size() != 3) schema_fail(where, p, "expected [x0, x1, spin]");
        out.push_back({{number(e[0], where, p + "/0"), number(e[1], where, p + "/1")},
                       Spin{static_cast<std::uint32_t>(count(e[2], where, p + "/2"))}});
    }
    return out;
}

Json particles_to_json(const std::vector<Particle>& ps)
{
    Json a = Json::array();
    for (const auto& p : ps) a.push_back(Json::array({p.x.x0, p.x.x1, p.spin.id}));
    return a;
}

Norm norm_from_json(const Json& j, const std::string& where, const std::string& path)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "max") return Norm::max();
        if (s == "euclidean") return Norm::euclidean();
        schema_fail(where, path, "unknown norm '" + s + "'");
    }
    const Json& kind = field(j, "kind", where, path);
    if (!kind.is_string() || kind.get<std::string>() != "weighted") schema_fail(where, path + "/kind", "expected 'weighted'");
    const Json& w = field(j, "weights", where, path);
    if (!w.is_array() || w.size() != 2) schema_fail(where, path + "/weights", "expected [w0, w1]");
    try {
        return Norm::weighted(number(w[0], where, path + "/weights/0"), number(w[1], where, path + "/weights/1"));
    } catch (const ParameterError& e) {
        schema_fail(where, path + "/weights", e.what());
    }
}

Json norm_to_json(const Norm& n)
{
    switch (n.kind()) {
    case NormKind::max:
        return "max";
    case NormKind::euclidean:
        return "euclidean";
    case NormKind::weighted:
        break;
    }
    const auto w = n.weights();
    return Json{{"kind", "weighted"}, {"weights", Json::array({w[0], w[1]})}};
}

WellBehavedFn interaction_from_json(const Json& j, const std::string& where, const std::string& path)
{
    const Json& kind_j = field(j, "kind", where, path);
    if (!kind_j.is_string()) schema_fail(where, path + "/kind", "expected a string");
    const auto kind = kind_j.get<std::string>();
    try {
        if (kind == "zero") return WellBehavedFn::hard_core(0.0);
        if (kind == "hard_core") return WellBehavedFn::hard_core(number(field(j, "r0", where, path), where, path + "/r0"));
        if (kind == "step") {
            const double r0 = number(field(j, "r0", where, path), where, path + "/r0");
            const double r1 = number(field(j, "r1", where, path), where, path + "/r1");
            const double h = number(field(j, "height", where, path), where, path + "/height");
            return WellBehavedFn::step(r0, r1, h, number_or(j, "value_at_r1", h, where, path));
        }
        if (kind == "piecewise") {
            const Json& bj = field(j, "breakpoints", where, path);
            const Json& pj = field(j, "pieces", where, path);
            const Json& vj = field(j, "point_values", where, path);
            if (!bj.is_array() || !pj.is_array() || !vj.is_array())
                schema_fail(where, path, "breakpoints, pieces and point_values must be arrays");
            std::vector<double> b, v;
            std::vector<Cubic> pieces;
            for (std::size_t i = 0; i < bj.size(); ++i) b.push_back(number(bj[i], where, path + "/breakpoints/" + std::to_string(i)));
            for (std::size_t i = 0; i < vj.size(); ++i) v.push_back(number(vj[i], where, path + "/point_values/" + std::to_string(i)));
            for (std::size_t i = 0; i < pj.size(); ++i) {
                const std::string p = path + "/pieces/" + std::to_string(i);
                if (!pj[i].is_array() || pj[i].empty() || pj[i].size() > 4)
                    schema_fail(where, p, "expected 1 to 4 polynomial coefficients");
                Cubic c{};
                for (std::size_t k = 0; k < pj[i].size(); ++k) c.c[k] = number(pj[i][k], where, p + "/" + std::to_string(k));
                pieces.push_back(c);
            }
            return WellBehavedFn(std::move(b), std::move(pieces), std::move(v));
        }
    } catch (const ParameterError& e) {
        schema_fail(where, path, e.what());
    }
    schema_fail(where, path + "/kind", "unknown interaction kind '" + kind + "'");
}

Json interaction_to_json(const WellBehavedFn& fn)
{
    Json pieces = Json::array();
    for (const auto& c : fn.pieces()) pieces.push_back(Json::array({c.c[0], c.c[1], c.c[2], c.c[3]}));
    return Json{{"kind", "piecewise"},
                {"breakpoints", fn.breakpoints()},
                {"pieces", pieces},
                {"point_values", fn.point_values()}};
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

Json to_json(const Configuration& config)
{
    Json j;
    j["window_r"] = config.window().r();
    j["interior"] = particles_to_json(config.interior());
    j["boundary"] = particles_to_json(config.boundary());
    return j;
}

Configuration configuration_from_json(const Json& j, const std::string& where)
{
    const double r = number(field(j, "window_r", where, ""), where, "/window_r");
    auto interior = particles_from_json(field(j, "interior", where, ""), where, "/interior");
    std::vector<Particle> boundary;
    if (j.contains("boundary")) boundary = particles_from_json(j["boundary"], where, "/boundary");
    try {
        return Configuration(Window(r), std::move(interior), std::move(boundary));
    } catch (const ParameterError& e) {
        schema_fail(where, "", e.what());
    }
}

std::string config_hash(const Configuration& config)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(config).dump())));
    return buf;
}

Json to_json(const BondSet& bonds, const Configuration& config)
{
    Json edges = Json::array();
    for (const auto& [a, b] : bonds.edges) edges.push_back(Json::array({a, b}));
    return Json{{"config_hash", config_hash(config)}, {"scope", bonds.scope}, {"edges", edges}};
}

BondSet bonds_from_json(const Json& j, const Configuration& config, const std::string& where)
{
    const Json& h = field(j, "config_hash", where, "");
    if (!h.is_string()) schema_fail(where, "/config_hash", "expected a string");
    if (h.get<std::string>() != config_hash(config))
        throw SchemaError(where + ": bond set was built for a different configuration (hash mismatch)");
    BondSet b;
    b.scope = number_or(j, "scope", 0.0, where, "");
    const Json& e = field(j, "edges", where, "");
    if (!e.is_array()) schema_fail(where, "/edges", "expected an array");
    for (std::size_t i = 0; i < e.size(); ++i) {
        const std::string p = "/edges/" + std::to_string(i);
        if (!e[i].is_array() || e[i].size() != 2) schema_fail(where, p, "expected [a, b]");
        b.edges.emplace_back(static_cast<std::uint32_t>(count(e[i][0], where, p + "/0")),
                             static_cast<std::uint32_t>(count(e[i][1], where, p + "/1")));
    }
    b.normalize();
    try {
        validate_bonds(b, config);
    } catch (const ParameterError& ex) {
        schema_fail(where, "/edges", ex.what());
    }
    return b;
}

Json to_json(const TaperParams& p)
{
    return Json{{"tau", p.tau},   {"R", p.R},         {"n", p.n},       {"nprime", p.nprime},
                {"delta", p.delta}, {"direction", p.direction}, {"c_K", p.c_K}, {"c_f", p.c_f}};
}

Json to_json(const TransformResult& r)
{
    Json steps = Json::array();
    for (const auto& s : r.partition) steps.push_back(Json{{"P", s.P}, {"C", s.C}, {"tau", s.tau}});
    Json factors = Json::array();
    for (const auto& f : r.factors)
        factors.push_back(Json{{"particle", f.particle}, {"step", f.step}, {"deriv", f.deriv}, {"factor", f.factor}, {"tie", f.tie}});
    Json j;
    j["kind"] = r.kind;
    j["direction"] = r.direction;
    j["density"] = r.density;
    j["ties"] = r.ties;
    j["global_sources"] = r.global_sources;
    j["t_map"] = r.t_map;
    j["partition"] = steps;
    j["factors"] = factors;
    j["transformed"] = to_json(r.transformed);
    j["transformed_bonds"] = to_json(r.transformed_bonds, r.transformed);
    return j;
}

Json to_json(const SuiteReport& r)
{
    Json checks = Json::array();
    for (const auto& c : r.checks)
        checks.push_back(Json{{"name", c.name},
                              {"result", c.vacuous ? "vacuous" : (c.pass ? "pass" : "fail")},
                              {"count", c.count},
                              {"measured", std::isfinite(c.measured) ? Json(c.measured) : Json(std::to_string(c.measured))},
                              {"tolerance", c.tolerance},
                              {"seed", c.seed},
                              {"detail", c.detail}});
    return Json{{"suite", r.suite}, {"seed", r.seed}, {"passed", r.passed()}, {"checks", checks}};
}

Json parse_json(const std::string& text, const std::string& where)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SchemaError(where + ": line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": invalid JSON");
    }
}

Json read_json_file(const std::string& path) { return parse_json(read_file(path), path); }

std::vector<Json> read_json_lines(const std::string& path)
{
    std::istringstream in(read_file(path));
    std::vector<Json> out;
    std::string line;
    std::size_t number_of_line = 0;
    while (std::getline(in, line)) {
        ++number_of_line;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_json(line, path + ": record on line " + std::to_string(number_of_line)));
    }
    return out;
}

Model model_from_json(const Json& j, const std::string& where)
{
    if (!j.is_object()) schema_fail(where, "", "expected an object");
    const auto version = count(field(j, "schema_version", where, ""), where, "/schema_version");
    if (version != static_cast<std::uint64_t>(schema_version))
        schema_fail(where, "/schema_version", "unsupported version " + std::to_string(version));
    std::string name = "model";
    if (j.contains("name")) {
        if (!j["name"].is_string()) schema_fail(where, "/name", "expected a string");
        name = j["name"].get<std::string>();
    }
    const Norm norm = j.contains("norm") ? norm_from_json(j["norm"], where, "/norm") : Norm::euclidean();
    const auto spins = count(field(j, "spins", where, ""), where, "/spins");
    if (spins < 1 || spins > 1024) schema_fail(where, "/spins", "expected 1 to 1024 spins");
    const double z = number(field(j, "activity", where, ""), where, "/activity");
    if (!(z > 0.0)) schema_fail(where, "/activity", "activity must be positive");
    const double xi = number_or(j, "xi", 1.0, where, "");
    const double eps = number_or(j, "eps", 0.0, where, "");
    const double mollify = number_or(j, "mollify_width", 0.0, where, "");

    const WellBehavedFn fallback =
        j.contains("default") ? interaction_from_json(j["default"], where, "/default") : WellBehavedFn::hard_core(0.0);
    std::vector<WellBehavedFn> table(spins * spins, fallback);
    std::vector<bool> set(spins * spins, false);
    if (j.contains("interactions")) {
        const Json& list = j["interactions"];
        if (!list.is_array()) schema_fail(where, "/interactions", "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string p = "/interactions/" + std::to_string(i);
            const Json& pair = field(list[i], "spins", where, p);
            if (!pair.is_array() || pair.size() != 2) schema_fail(where, p + "/spins", "expected [a, b]");
            const auto a = count(pair[0], where, p + "/spins/0");
            const auto b = count(pair[1], where, p + "/spins/1");
            if (a >= spins || b >= spins) schema_fail(where, p + "/spins", "spin index out of range");
            if (set[a * spins + b]) schema_fail(where, p + "/spins", "pair listed twice");
            const auto fn = interaction_from_json(list[i], where, p);
            table[a * spins + b] = fn;
            table[b * spins + a] = fn;
            set[a * spins + b] = set[b * spins + a] = true;
        }
    }

    SamplerSettings sampler;
    if (j.contains("sampler")) {
        const Json& s = j["sampler"];
        if (!s.is_object()) schema_fail(where, "/sampler", "expected an object");
        sampler.burn_in = count_or(s, "burn_in", sampler.burn_in, where, "/sampler");
        sampler.thinning = count_or(s, "thinning", sampler.thinning, where, "/sampler");
        if (sampler.thinning == 0) schema_fail(where, "/sampler/thinning", "must be positive");
        sampler.move_sigma = number_or(s, "move_sigma", sampler.move_sigma, where, "/sampler");
    }
    const double window = number_or(j, "window", 8.0, where, "");
    if (!(window > 0.0)) schema_fail(where, "/window", "must be positive");

    try {
        PottsPotential pot(norm, static_cast<std::uint32_t>(spins), std::move(table), eps);
        Model m = make_model(std::move(name), std::move(pot), z, xi, mollify);
        m.window = window;
        m.sampler = sampler;
        return m;
    } catch (const ParameterError& e) {
        schema_fail(where, "", e.what());
    }
}

Model load_model(const std::string& path) { return model_from_json(read_json_file(path), path); }

Json to_json(const Model& m)
{
    const auto& pot = m.pot;
    Json inter = Json::array();
    for (std::uint32_t a = 0; a < pot.spin_count(); ++a)
        for (std::uint32_t b = a; b < pot.spin_count(); ++b) {
            Json e = interaction_to_json(pot.fn(Spin{a}, Spin{b}));
            e["spins"] = Json::array({a, b});
            inter.push_back(e);
        }
    return Json{{"schema_version", schema_version},
                {"name", m.name},
                {"norm", norm_to_json(pot.norm())},
                {"spins", pot.spin_count()},
                {"activity", m.z},
                {"xi", m.xi},
                {"eps", pot.eps()},
                {"mollify_width", m.dec.mollify_width()},
                {"interactions", inter},
                {"window", m.window},
                {"sampler", Json{{"burn_in", m.sampler.burn_in},
                                 {"thinning", m.sampler.thinning},
                                 {"move_sigma", m.sampler.move_sigma}}}};
}

TaperParams parse_taper(const std::string& spec, const DecomposedPotential& dec)
{
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 5) throw ParameterError("taper must be \"tau,R,n,nprime,delta\"");
    try {
        std::size_t used = 0;
        auto as_double = [&](const std::string& s) {
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        };
        auto as_int = [&](const std::string& s) {
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        };
        return make_taper(as_double(parts[0]), as_int(parts[1]), as_int(parts[2]), as_int(parts[3]),
                          as_double(parts[4]), dec);
    } catch (const ParameterError&) {
        throw;
    } catch (const std::exception&) {
        throw ParameterError("taper must be \"tau,R,n,nprime,delta\" with integer R, n, nprime");
    }
}

} // namespace cg
