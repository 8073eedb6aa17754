#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "cgibbs/io.hpp"
#include "cgibbs/sampler.hpp"

using namespace cg;

namespace {

Particle at(double x0, double x1, std::uint32_t s = 0) { return {{x0, x1}, Spin{s}}; }

std::string schema_message(const Json& j)
{
    try {
        model_from_json(j, "m.json");
    } catch (const SchemaError& e) {
        return e.what();
    }
    return {};
}

Json minimal_model()
{
    return Json::parse(R"({"schema_version": 1, "spins": 2, "activity": 0.5,
                           "interactions": [{"spins": [0, 1], "kind": "hard_core", "r0": 1.0}]})");
}

} // namespace

TEST_CASE("configurations round-trip exactly through text")
{
    RandomStream rng(1, "io");
    for (int i = 0; i < 50; ++i) {
        const auto c = sample_poisson(Window(3.0), 1.0, 3, rng);
        const Configuration withb(c.window(), c.interior(), {at(3.0 + rng.uniform(), -1.0 / 3.0, 2)});
        const auto back = configuration_from_json(Json::parse(to_json(withb).dump()));
        CHECK(back.window().r() == withb.window().r());
        CHECK(back.interior() == withb.interior());
        CHECK(back.boundary() == withb.boundary());
        CHECK(config_hash(back) == config_hash(withb));
    }
}

TEST_CASE("configuration hash separates configurations")
{
    const Configuration a(Window(2.0), {at(0, 0), at(1, 0)});
    const Configuration b(Window(2.0), {at(0, 0), at(1, 0, 1)});
    const Configuration c(Window(2.0), {at(0, 0), at(std::nextafter(1.0, 2.0), 0)});
    CHECK(config_hash(a) == config_hash(Configuration(Window(2.0), {at(0, 0), at(1, 0)})));
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("bonds round-trip and reject a foreign configuration")
{
    const Configuration a(Window(2.0), {at(0, 0), at(1, 0), at(1.5, 0)});
    BondSet b;
    b.scope = 2.0;
    b.edges = {{0, 1}, {1, 2}};
    const auto back = bonds_from_json(to_json(b, a), a);
    CHECK(back.edges == b.edges);
    CHECK(back.scope == b.scope);

    const Configuration other(Window(2.0), {at(0, 0), at(1, 0), at(1.25, 0)});
    CHECK_THROWS_AS(bonds_from_json(to_json(b, a), other), SchemaError);
}

TEST_CASE("shipped model files load")
{
    const auto wr = load_model("models/wr.json");
    CHECK(wr.name == "widom-rowlinson");
    CHECK(wr.z == 0.2);
    CHECK(wr.pot(at(0, 0, 0), at(0.9, 0, 1)).is_infinite());
    CHECK(wr.sampler.thinning == 10);
    for (const char* f : {"models/zero.json", "models/potts_step.json"}) {
        CAPTURE(f);
        CHECK_NOTHROW(load_model(f));
    }
}

TEST_CASE("models round-trip through their json form")
{
    for (const char* f : {"models/wr.json", "models/zero.json", "models/potts_step.json"}) {
        CAPTURE(f);
        const auto m = load_model(f);
        const auto again = model_from_json(Json::parse(to_json(m).dump()), "again");
        CHECK(to_json(again) == to_json(m));
        CHECK(again.dec.constants().c_xi == m.dec.constants().c_xi);
    }
}

TEST_CASE("syntax errors report line and column")
{
    try {
        parse_json("{\n  \"a\": 1,\n  \"b\": ]\n}", "bad.json");
        FAIL("expected a SchemaError");
    } catch (const SchemaError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad.json") != std::string::npos);
        CHECK(msg.find("line 3, column") != std::string::npos);
    }
}

TEST_CASE("schema errors name the field path")
{
    auto j = minimal_model();
    CHECK_NOTHROW(model_from_json(j, "m.json"));

    j.erase("activity");
    CHECK(schema_message(j) == "m.json: /activity: missing field");

    j = minimal_model();
    j["interactions"][0]["r0"] = "one";
    CHECK(schema_message(j) == "m.json: /interactions/0/r0: expected a number");

    j = minimal_model();
    j["interactions"][0]["spins"] = Json::array({0, 5});
    CHECK(schema_message(j) == "m.json: /interactions/0/spins: spin index out of range");

    j = minimal_model();
    j["schema_version"] = 2;
    CHECK(schema_message(j).find("/schema_version") != std::string::npos);

    j = minimal_model();
    j["sampler"] = Json{{"thinning", 0}};
    CHECK(schema_message(j) == "m.json: /sampler/thinning: must be positive");

    CHECK_THROWS_AS(load_model("models/does_not_exist.json"), SchemaError);
}

TEST_CASE("taper specifications parse strictly")
{
    const auto m = load_model("models/wr.json");
    const auto p = parse_taper("0.5,2,5,1,0.25", m.dec);
    CHECK(p.tau == 0.5);
    CHECK(p.R == 2);
    CHECK(p.n == 5);
    CHECK(p.nprime == 1);
    CHECK(p.delta == 0.25);
    CHECK(p.c_f > 0.0);
    CHECK_THROWS_AS(parse_taper("0.5,2,5,1", m.dec), ParameterError);
    CHECK_THROWS_AS(parse_taper("0.5,2.5,5,1,0.25", m.dec), ParameterError);
    CHECK_THROWS_AS(parse_taper("0.5,2,5,1,x", m.dec), ParameterError);
}
