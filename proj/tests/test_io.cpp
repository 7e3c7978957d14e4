#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "billiards/errors.hpp"
#include "billiards/table_io.hpp"

using namespace billiards;
using nlohmann::json;

TEST_CASE("table documents round-trip")
{
    for (const BilliardTable& t : {make_stadium(2.0, 1.0), make_flower(), make_three_cusp(1.0)}) {
        const json doc = table_spec_to_json(t.spec());
        const BilliardTable u = table_from_json(doc);
        CHECK(u.family() == t.family());
        CHECK(u.component_count() == t.component_count());
        CHECK(u.length() == doctest::Approx(t.length()).epsilon(1e-14));
        CHECK(u.area() == doctest::Approx(t.area()).epsilon(1e-14));
        CHECK(table_spec_to_json(u.spec()) == doc);
    }
}

TEST_CASE("malformed documents")
{
    const json good = table_spec_to_json(make_stadium(2.0, 1.0).spec());
    SUBCASE("unknown top-level field")
    {
        json d = good;
        d["colour"] = "red";
        CHECK_THROWS_AS(table_spec_from_json(d), SpecError);
    }
    SUBCASE("unknown component field")
    {
        json d = good;
        d["components"][0]["width"] = 1;
        CHECK_THROWS_AS(table_spec_from_json(d), SpecError);
    }
    SUBCASE("unknown kind")
    {
        json d = good;
        d["components"][0]["kind"] = "spline";
        CHECK_THROWS_AS(table_spec_from_json(d), SpecError);
    }
    SUBCASE("missing key")
    {
        json d = good;
        d["components"][1].erase("radius");
        CHECK_THROWS_AS(table_spec_from_json(d), SpecError);
    }
    SUBCASE("wrong type")
    {
        json d = good;
        d["components"][1]["radius"] = "one";
        CHECK_THROWS_AS(table_spec_from_json(d), SpecError);
    }
    SUBCASE("valid syntax, invalid geometry")
    {
        json d = good;
        d["components"][0]["a"] = json::array({-1.0, -1.5});
        CHECK_THROWS_AS(table_from_json(d), TableError);
    }
    SUBCASE("flower family is checked")
    {
        json d = good;
        d["family"] = "flower";
        CHECK_THROWS_AS(table_from_json(d), TableError);
    }
}

TEST_CASE("reading files")
{
    const auto dir = std::filesystem::temp_directory_path() / "billiards_io_test";
    std::filesystem::create_directories(dir);
    CHECK_THROWS_AS(read_json_file(dir / "absent.json"), std::runtime_error);
    {
        std::ofstream(dir / "broken.json") << "{\"components\": [";
    }
    CHECK_THROWS_AS(read_json_file(dir / "broken.json"), SpecError);
    {
        std::ofstream(dir / "ok.json") << table_spec_to_json(make_three_cusp(1.0).spec()).dump();
    }
    CHECK(table_from_json(read_json_file(dir / "ok.json")).cusp_corner_indices().size() == 3);
    std::filesystem::remove_all(dir);
}
