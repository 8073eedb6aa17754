#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cgibbs/io.hpp"
#include "cgibbs/verify.hpp"

#ifndef CGIBBS_VERSION
#define CGIBBS_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace cg;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_usage = 2;

struct Common {
    std::string model_path = "models/wr.json";
    std::uint64_t seed = 1;
    std::string out;
    unsigned threads = 1;
};

fs::path output_dir(const Common& c)
{
    std::string dir = c.out;
    if (dir.empty()) {
        const char* env = std::getenv("CGIBBS_OUT");
        dir = env && *env ? env : "out";
    }
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError(path.string() + ": cannot write file");
    out << text;
}

std::string csv_header(std::uint64_t seed, const std::string& what)
{
    return "# schema_version=" + std::to_string(schema_version) + " seed=" + std::to_string(seed) + " " + what + "\n";
}

std::string num(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// A configuration file holds either a configuration object or sample records {config: ...}, one per line.
Configuration load_configuration(const std::string& path, std::size_t index)
{
    const auto records = read_json_lines(path);
    if (records.empty()) throw SchemaError(path + ": no configuration found");
    std::vector<Json> whole;
    const Json* rec = nullptr;
    if (records.size() == 1 && !records[0].contains("config") && !records[0].contains("window_r")) {
        whole.push_back(read_json_file(path));
        rec = &whole.front();
    } else {
        if (index >= records.size()) throw SchemaError(path + ": record index " + std::to_string(index) + " out of range");
        rec = &records[index];
    }
    if (rec->contains("config")) return configuration_from_json((*rec)["config"], path);
    return configuration_from_json(*rec, path);
}

int cmd_sample(const Common& c, std::size_t sweeps, double window, double ring)
{
    const Model model = load_model(c.model_path);
    const double r = window > 0.0 ? window : model.window;
    RandomStream rng(c.seed, "cli/sample");
    std::vector<Particle> boundary;
    if (ring > 0.0) boundary = poisson_ring(Window(r), ring, model.z, model.pot.spin_count(), rng);
    GibbsParams gp = model.gibbs(r, boundary);
    gp.sweeps = sweeps;
    const auto samples = run_chain(gp, rng);

    const fs::path dir = output_dir(c);
    std::string lines;
    std::size_t violations = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        violations += hard_core_violations(model.pot, samples[i]);
        mean += static_cast<double>(samples[i].interior_count());
        Json rec{{"schema_version", schema_version}, {"seed", c.seed}, {"index", i}, {"config", to_json(samples[i])}};
        lines += rec.dump() + "\n";
    }
    if (!samples.empty()) mean /= static_cast<double>(samples.size());
    write_text(dir / "samples.jsonl", lines);
    Json manifest{{"schema_version", schema_version},
                  {"seed", c.seed},
                  {"version", CGIBBS_VERSION},
                  {"command", "sample"},
                  {"parameters",
                   Json{{"sweeps", sweeps},
                        {"burn_in", gp.burn_in},
                        {"thinning", gp.thinning},
                        {"window", r},
                        {"boundary_ring", ring},
                        {"boundary_particles", boundary.size()}}},
                  {"model", to_json(model)},
                  {"samples", samples.size()},
                  {"mean_interior_count", mean},
                  {"hard_core_violations", violations}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << samples.size() << " samples, mean interior count " << mean << ", hard-core violations "
              << violations << "\n";
    return violations == 0 ? exit_ok : exit_check_failed;
}

int cmd_transform(const Common& c, const std::string& config_path, std::size_t index, const std::string& bonds_path,
                  const std::string& direction, const std::string& taper, bool roundtrip)
{
    const Model model = load_model(c.model_path);
    const Configuration config = load_configuration(config_path, index);
    TaperParams p = parse_taper(taper, model.dec);
    const fs::path dir = output_dir(c);

    BondSet bonds;
    if (!bonds_path.empty()) {
        bonds = bonds_from_json(read_json_file(bonds_path), config, bonds_path);
    } else {
        RandomStream rng(c.seed, "cli/bonds");
        bonds = sample_bonds(config, model.dec, p.n, rng);
        Json bj = to_json(bonds, config);
        bj["schema_version"] = schema_version;
        bj["seed"] = c.seed;
        write_text(dir / "bonds.json", bj.dump(2) + "\n");
    }

    TransformResult result;
    if (direction == "fwd") {
        result = forward_transform(config, bonds, p, model.dec);
    } else if (direction == "bwd") {
        p.direction = -1;
        result = backward_transform(config, bonds, p, model.dec);
    } else {
        result = inverse_transform(config, bonds, p, model.dec);
    }

    Json out{{"schema_version", schema_version},
             {"seed", c.seed},
             {"direction", direction},
             {"taper", to_json(p)},
             {"input_hash", config_hash(config)}};
    if (roundtrip) {
        const TransformResult back = direction == "inv" ? forward_transform(result.transformed, bonds, p, model.dec)
                                                        : inverse_transform(result.transformed, bonds, p, model.dec);
        double err = 0.0;
        for (std::size_t i = 0; i < config.size(); ++i)
            err = std::max(err, max_abs(back.transformed.at(i).x - config.at(i).x));
        out["roundtrip_max_error"] = err;
        std::cout << "round-trip max position error " << err << "\n";
    }
    out["result"] = to_json(result);
    write_text(dir / "transform.json", out.dump(2) + "\n");

    std::string csv = csv_header(c.seed, "taper profile") + "index,abs_y,t_map\n";
    for (std::size_t i = 0; i < config.size(); ++i)
        csv += std::to_string(i) + "," + num(max_abs(config.at(i).x)) + "," + num(result.t_map[i]) + "\n";
    write_text(dir / "taper_profile.csv", csv);
    std::cout << result.partition.size() << " steps, density " << result.density << "\n";
    return exit_ok;
}

struct VerifyFlags {
    std::string suites = "all";
    std::string taper;
    std::size_t samples = 0;
    bool negative_control = false;
};

const std::vector<std::string> suite_names{"lekrit", "taper",   "decomposition", "zero",
                                           "transform", "density", "invariance",    "good-set"};

SuiteReport run_suite(const std::string& name, const Model& model, const Common& c, const VerifyFlags& f)
{
    const std::size_t n = f.samples;
    if (name == "lekrit") return check_lekrit_suite(n ? n : 100, c.seed);
    if (name == "taper") return check_taper_closed_form();
    if (name == "decomposition") return check_decomposition(model, n ? n : 10000, c.seed);
    if (name == "zero") {
        const Model zero = zero_model(1.0, 0.05, model.pot.spin_count());
        return check_zero_potential(zero, 2.0, n ? n : 10000, 20, c.seed);
    }
    if (name == "transform") {
        TransformSuiteOptions o;
        o.samples = n ? n : 1000;
        o.threads = c.threads;
        if (!f.taper.empty()) {
            const TaperParams p = parse_taper(f.taper, model.dec);
            o.tau = p.tau;
            o.R = p.R;
            o.n = p.n;
            o.nprime = p.nprime;
            o.delta = p.delta;
            o.window = std::max(o.window, static_cast<double>(p.n));
        }
        return check_transform_suite(model, o, c.seed);
    }
    if (name == "density") {
        DensityOptions o;
        o.samples = n ? n : 100000;
        o.threads = c.threads;
        o.unit_density = f.negative_control;
        if (!f.taper.empty()) {
            const TaperParams p = parse_taper(f.taper, model.dec);
            o.tau = p.tau;
            o.R = p.R;
            o.n = p.n;
            o.nprime = p.nprime;
        }
        return check_density_identity(model, o, c.seed);
    }
    if (name == "invariance") {
        InvarianceOptions o;
        o.window = model.window;
        o.samples = n ? n : 2000;
        if (f.negative_control) o.birth_tilt = 1.0;
        return check_invariance_statistical(model, o, c.seed);
    }
    if (name == "good-set") {
        GoodSetOptions o;
        o.draws = n ? n : 500;
        return check_good_set_trend(model, o, c.seed);
    }
    throw CLI::ValidationError("--suite", "unknown suite '" + name + "'");
}

int cmd_verify(const Common& c, const VerifyFlags& f)
{
    std::vector<std::string> chosen;
    std::stringstream ss(f.suites);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "all") {
            chosen.insert(chosen.end(), suite_names.begin(), suite_names.end());
        } else if (std::find(suite_names.begin(), suite_names.end(), item) != suite_names.end()) {
            chosen.push_back(item);
        } else {
            std::cerr << "unknown suite '" << item << "'; known: all";
            for (const auto& s : suite_names) std::cerr << ", " << s;
            std::cerr << "\n";
            return exit_usage;
        }
    }
    // lekrit and taper need no model.
    std::optional<Model> model;
    const Model fallback = zero_model();
    for (const auto& name : chosen)
        if (name != "lekrit" && name != "taper" && !model) model = load_model(c.model_path);
    const fs::path dir = output_dir(c);
    Json reports = Json::array();
    std::string text;
    bool ok = true;
    for (const auto& name : chosen) {
        const SuiteReport rep = run_suite(name, model ? *model : fallback, c, f);
        ok = ok && rep.passed();
        reports.push_back(to_json(rep));
        text += rep.table() + "\n";
        std::cout << rep.table() << std::endl;
    }
    Json out{{"schema_version", schema_version},
             {"seed", c.seed},
             {"version", CGIBBS_VERSION},
             {"model", model ? model->name : "none"},
             {"negative_control", f.negative_control},
             {"passed", ok},
             {"suites", reports}};
    write_text(dir / "report.json", out.dump(2) + "\n");
    write_text(dir / "report.txt", text);
    return ok ? exit_ok : exit_check_failed;
}

int cmd_stats(const Common& c, const std::string& samples_path, double half_width, double rmax, std::size_t bins)
{
    const auto records = read_json_lines(samples_path);
    if (records.empty()) throw SchemaError(samples_path + ": empty samples file");
    const Model model = load_model(c.model_path);
    const Norm& norm = model.pot.norm();
    const std::uint32_t spins = model.pot.spin_count();
    std::uint64_t seed = c.seed;
    if (records.front().contains("seed") && records.front()["seed"].is_number_unsigned())
        seed = records.front()["seed"].get<std::uint64_t>();

    std::map<std::size_t, std::size_t> hist;
    std::vector<double> spin_counts(spins, 0.0);
    std::vector<double> like(bins, 0.0), unlike(bins, 0.0);
    double like_expect = 0.0, unlike_expect = 0.0;
    double total = 0.0;
    const Window count_window(half_width);
    for (std::size_t s = 0; s < records.size(); ++s) {
        const Json& rec = records[s];
        const Configuration cfg =
            configuration_from_json(rec.contains("config") ? rec["config"] : rec, samples_path + ": record " + std::to_string(s));
        const auto& ps = cfg.interior();
        std::size_t k = 0;
        for (const auto& p : ps) {
            k += count_window.contains(p.x);
            if (p.spin.id >= spins) throw SchemaError(samples_path + ": spin index out of range for the model");
            spin_counts[p.spin.id] += 1.0;
        }
        ++hist[k];
        total += static_cast<double>(ps.size());

        // Minus sampling: reference points at least rmax inside the window, partners anywhere in it.
        const double inner = cfg.window().r() - rmax;
        if (inner <= 0.0) continue;
        const Window ref(inner);
        const double area = cfg.window().area();
        std::vector<double> per_spin(spins, 0.0);
        for (const auto& p : ps) per_spin[p.spin.id] += 1.0;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            if (!ref.contains(ps[i].x)) continue;
            const double same = per_spin[ps[i].spin.id] - 1.0;
            like_expect += same / area;
            unlike_expect += (static_cast<double>(ps.size()) - 1.0 - same) / area;
            for (std::size_t j = 0; j < ps.size(); ++j) {
                if (j == i) continue;
                const double d = norm(ps[j].x - ps[i].x);
                if (d >= rmax) continue;
                const auto b = static_cast<std::size_t>(d / rmax * static_cast<double>(bins));
                (ps[j].spin == ps[i].spin ? like : unlike)[std::min(b, bins - 1)] += 1.0;
            }
        }
    }

    const fs::path dir = output_dir(c);
    const double n = static_cast<double>(records.size());
    double mean = 0.0;
    for (const auto& [k, v] : hist) mean += static_cast<double>(k) * static_cast<double>(v);
    mean /= n;
    std::string counts = csv_header(seed, "counts in [-" + num(half_width) + "," + num(half_width) + ")^2") +
                         "count,samples,fraction,poisson_pmf\n";
    const std::size_t top = hist.rbegin()->first;
    for (std::size_t k = 0; k <= top; ++k) {
        const double f = hist.count(k) ? static_cast<double>(hist[k]) : 0.0;
        const double pmf = std::exp(static_cast<double>(k) * std::log(std::max(mean, 1e-300)) - mean -
                                    std::lgamma(static_cast<double>(k) + 1.0));
        counts += std::to_string(k) + "," + num(f) + "," + num(f / n) + "," + num(pmf) + "\n";
    }
    write_text(dir / "counts.csv", counts);

    std::string spin_csv = csv_header(seed, "spin fractions") + "spin,count,fraction\n";
    for (std::uint32_t s = 0; s < spins; ++s)
        spin_csv += std::to_string(s) + "," + num(spin_counts[s]) + "," + num(total > 0 ? spin_counts[s] / total : 0.0) + "\n";
    write_text(dir / "spins.csv", spin_csv);

    std::string pc = csv_header(seed, "pair correlation by spin relation") + "r_lo,r_hi,like,unlike\n";
    const double ball = norm.unit_ball_area();
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = rmax * static_cast<double>(b) / static_cast<double>(bins);
        const double hi = rmax * static_cast<double>(b + 1) / static_cast<double>(bins);
        const double shell = ball * (hi * hi - lo * lo);
        const double gl = like_expect > 0 ? like[b] / (like_expect * shell) : 0.0;
        const double gu = unlike_expect > 0 ? unlike[b] / (unlike_expect * shell) : 0.0;
        pc += num(lo) + "," + num(hi) + "," + num(gl) + "," + num(gu) + "\n";
    }
    write_text(dir / "pair_correlation.csv", pc);
    std::cout << records.size() << " samples, mean count " << mean << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Continuum Potts-type Gibbs sampler, deformed translations and their verification"};
    app.require_subcommand(1);
    Common c;
    auto common = [&c](CLI::App* sub) {
        sub->add_option("--model", c.model_path, "Model file (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", c.seed, "Master seed");
        sub->add_option("--out", c.out, "Output directory (default $CGIBBS_OUT or ./out)");
        sub->add_option("--threads", c.threads, "Worker cap")->check(CLI::Range(1u, 256u));
    };

    auto* sample = app.add_subcommand("sample", "Run the Gibbs chain and write JSON-lines samples");
    common(sample);
    std::size_t sweeps = 1000;
    double window = 0.0, ring = 0.0;
    sample->add_option("--sweeps", sweeps, "Sweeps after burn-in");
    sample->add_option("--window", window, "Window half-width (default from the model)");
    sample->add_option("--ring", ring, "Width of a Poisson boundary ring (0 for none)")->check(CLI::NonNegativeNumber);

    auto* transform = app.add_subcommand("transform", "Apply the deformed translation to one configuration");
    common(transform);
    std::string config_path, bonds_path, direction = "fwd", taper = "0.5,2,5,1,0.25";
    std::size_t index = 0;
    bool roundtrip = false;
    transform->add_option("--config", config_path, "Configuration or samples file")->required()->check(CLI::ExistingFile);
    transform->add_option("--index", index, "Record index in a samples file");
    transform->add_option("--bonds", bonds_path, "Bond file (sampled when absent)")->check(CLI::ExistingFile);
    transform->add_option("--direction", direction, "fwd, bwd or inv")->check(CLI::IsMember({"fwd", "bwd", "inv"}));
    transform->add_option("--taper", taper, "tau,R,n,nprime,delta");
    transform->add_flag("--roundtrip", roundtrip, "Report the round-trip position error");

    auto* verify = app.add_subcommand("verify", "Run verification suites");
    common(verify);
    VerifyFlags vf;
    verify->add_option("--suite", vf.suites, "Comma-separated suites or 'all'");
    verify->add_option("--taper", vf.taper, "tau,R,n,nprime,delta for the transform and density suites");
    verify->add_option("--samples", vf.samples, "Override the main sample count of each suite");
    verify->add_flag("--negative-control", vf.negative_control, "Break the density or sampler on purpose");

    auto* stats = app.add_subcommand("stats", "Count histograms, pair correlations and spin fractions");
    common(stats);
    std::string samples_path;
    double half_width = 1.0, rmax = 3.0;
    std::size_t bins = 30;
    stats->add_option("--samples", samples_path, "Samples file (JSON lines)")->required()->check(CLI::ExistingFile);
    stats->add_option("--half-width", half_width, "Counting window half-width")->check(CLI::PositiveNumber);
    stats->add_option("--rmax", rmax, "Largest pair distance")->check(CLI::PositiveNumber);
    stats->add_option("--bins", bins, "Pair distance bins")->check(CLI::Range(std::size_t{1}, std::size_t{10000}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*sample) return cmd_sample(c, sweeps, window, ring);
        if (*transform) return cmd_transform(c, config_path, index, bonds_path, direction, taper, roundtrip);
        if (*verify) return cmd_verify(c, vf);
        if (*stats) return cmd_stats(c, samples_path, half_width, rmax, bins);
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return exit_usage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_check_failed;
    }
    return exit_usage;
}
