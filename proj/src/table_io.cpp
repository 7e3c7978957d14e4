#include "billiards/table_io.hpp"

#include <fstream>
#include <set>

#include "billiards/errors.hpp"

namespace billiards {

namespace {

using nlohmann::json;

void only_fields(const json& obj, const std::set<std::string>& allowed, const char* what)
{
    if (!obj.is_object()) throw SpecError(std::string(what) + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw SpecError(std::string("unknown field '") + key + "' in " + what);
}

const json& field(const json& obj, const char* key)
{
    const auto it = obj.find(key);
    if (it == obj.end()) throw SpecError(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& obj, const char* key)
{
    const json& v = field(obj, key);
    if (!v.is_number()) throw SpecError(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

Vec2 point(const json& obj, const char* key)
{
    const json& v = field(obj, key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw SpecError(std::string("field '") + key + "' must be [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

TableSpec table_spec_from_json(const json& doc)
{
    only_fields(doc, {"family", "components"}, "table");
    TableSpec spec;
    if (doc.contains("family")) {
        if (!doc["family"].is_string()) throw SpecError("field 'family' must be a string");
        try {
            spec.family = family_from_string(doc["family"].get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw SpecError(e.what());
        }
    }
    const json& comps = field(doc, "components");
    if (!comps.is_array() || comps.empty()) throw SpecError("'components' must be a non-empty array");
    for (const json& c : comps) {
        if (!c.is_object() || !c.contains("kind") || !c["kind"].is_string())
            throw SpecError("each component needs a string 'kind'");
        const std::string kind = c["kind"].get<std::string>();
        if (kind == "segment") {
            only_fields(c, {"kind", "a", "b"}, "segment");
            spec.components.push_back(BoundaryComponent::segment(point(c, "a"), point(c, "b")));
        } else if (kind == "arc") {
            only_fields(c, {"kind", "center", "radius", "start_angle", "end_angle", "orientation"}, "arc");
            const json& o = field(c, "orientation");
            if (!o.is_string()) throw SpecError("field 'orientation' must be a string");
            Curvature curv;
            if (o == "dispersing") curv = Curvature::dispersing;
            else if (o == "focusing") curv = Curvature::focusing;
            else throw SpecError("orientation must be 'dispersing' or 'focusing'");
            spec.components.push_back(BoundaryComponent::arc(point(c, "center"), number(c, "radius"),
                                                             number(c, "start_angle"),
                                                             number(c, "end_angle"), curv));
        } else {
            throw SpecError("unknown component kind '" + kind + "'");
        }
    }
    return spec;
}

json table_spec_to_json(const TableSpec& spec)
{
    json comps = json::array();
    for (const auto& c : spec.components) {
        if (c.is_arc()) {
            comps.push_back({{"kind", "arc"},
                             {"center", {c.center.x, c.center.y}},
                             {"radius", c.radius},
                             {"start_angle", c.start_angle},
                             {"end_angle", c.end_angle},
                             {"orientation", std::string(to_string(c.curvature))}});
        } else {
            comps.push_back({{"kind", "segment"}, {"a", {c.a.x, c.a.y}}, {"b", {c.b.x, c.b.y}}});
        }
    }
    return {{"family", std::string(to_string(spec.family))}, {"components", comps}};
}

BilliardTable table_from_json(const json& doc)
{
    const TableSpec spec = table_spec_from_json(doc);
    return spec.family == Family::flower ? build_flower(spec) : build_table(spec);
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SpecError(path.string() + ": " + e.what());
    }
}

}  // namespace billiards
