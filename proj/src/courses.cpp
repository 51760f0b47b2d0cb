// Built-in course documents. Dimensions marked estimated are read off photos
// rather than measured.

#include "vinesim/error.hpp"
#include "vinesim/scenario.hpp"

namespace vinesim {

using nlohmann::json;

namespace {

json aabb(const char* id, const char* type, Vec3 lo, Vec3 hi, bool estimated = true)
{
    json j{{"id", id}, {"type", type}, {"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}};
    if (estimated) j["estimated"] = true;
    return j;
}

json wall(Vec3 lo, Vec3 hi) { return {{"min", {lo.x(), lo.y(), lo.z()}}, {"max", {hi.x(), hi.y(), hi.z()}}}; }

json cylinder(const std::string& id, double x, double y)
{
    return {{"id", id},        {"type", "cylinder"}, {"center", {x, y, 0.0}}, {"radius", 0.05},
            {"height", 0.5},   {"topple_tolerance", 0.02}, {"estimated", true}};
}

json location(const char* name, Vec3 p, double yaw = 0.0)
{
    return {{"name", name}, {"pose", {{"position", {p.x(), p.y(), p.z()}}, {"yaw", yaw}}}};
}

json robosoft()
{
    json obs = json::array();
    obs.push_back(aabb("floor_entry", "box", {-0.5, -1.0, -0.2}, {2.99, 1.0, 0.0}));
    obs.push_back(aabb("sand_pit", "sand", {0.5, -0.6, -0.15}, {2.0, 0.6, 0.0}));
    obs.push_back(aabb("sand_pit_exit", "goal", {2.05, -0.6, 0.0}, {2.4, 0.6, 0.6}, false));
    obs.push_back({{"id", "aperture"},
                   {"type", "aperture"},
                   {"pose", {{"position", {3.0, 0.0, 0.1}}}},
                   {"thickness", 0.02},
                   {"width", 1.6},
                   {"height", 1.2},
                   {"hole", {0.045, 0.045}}});
    obs.push_back(aabb("floor_course", "box", {3.01, -1.0, -0.2}, {9.6, 1.0, 0.0}));
    obs.push_back(aabb("aperture_exit", "goal", {3.05, -0.6, 0.0}, {3.4, 0.6, 0.6}, false));
    obs.push_back(aabb("stairs_lower", "box", {5.3, -0.8, 0.0}, {6.5, 0.8, 0.15}));
    obs.push_back(aabb("stairs_upper", "box", {5.6, -0.8, 0.15}, {6.2, 0.8, 0.3}));
    obs.push_back(aabb("stairs_exit", "goal", {6.6, -0.8, 0.0}, {6.9, 0.8, 0.9}, false));
    const double rows[] = {7.5, 8.0, 8.5};
    json cyl_ids = json::array();
    int n = 0;
    for (double x : rows)
        for (double y : {-0.11, 0.11}) {
            const std::string id = "cylinder_" + std::to_string(++n);
            obs.push_back(cylinder(id, x, y));
            cyl_ids.push_back(id);
        }
    obs.push_back(aabb("cylinders_exit", "goal", {8.9, -0.8, 0.0}, {9.5, 0.8, 0.9}, false));

    json items = json::array();
    items.push_back({{"id", "sand_pit"}, {"goal", "sand_pit_exit"}, {"points", 100}, {"whole_body_required", true}});
    items.push_back({{"id", "aperture"},
                     {"goal", "aperture_exit"},
                     {"points", 100},
                     {"whole_body_required", true},
                     {"aperture", "aperture"},
                     {"aperture_bonus", 100}});
    items.push_back({{"id", "stairs"}, {"goal", "stairs_exit"}, {"points", 100}, {"whole_body_required", true}});
    items.push_back({{"id", "cylinders"},
                     {"goal", "cylinders_exit"},
                     {"points", 100},
                     {"whole_body_required", false},
                     {"cylinders", cyl_ids}});

    return {{"format", kCourseFormat},
            {"name", "robosoft2018"},
            {"robot",
             {{"inflated_diameter", 7.0},
              {"body_length", 10.0},
              {"l_ctrl", 1.0},
              {"joystick_length", 1.0},
              {"kappa_retract", 0.2},
              {"p_max", 14.0},
              {"layout", {{"psi", {90.0, 210.0, 330.0}}, {"c", 0.015}}},
              {"growth", {{"p_body_max", 14.0}, {"c_p", 14.0 / 1023.0}, {"body_radius", 2.5}, {"q_max", 470.0}, {"v_max", 10.0}}},
              {"locations", json::array({location("course_start", {0.0, 0.0, 0.1})})}}},
            {"environment",
             {{"bounds", {{"min", {-0.5, -1.0, -0.2}}, {"max", {9.6, 1.0, 1.5}}}},
              {"gravity", {0.0, 0.0, -1.0}},
              {"obstacles", obs}}},
            {"rubric", {{"tip_only_multiplier", 0.5}, {"passage", "tip_only"}, {"time_limit", 900.0}, {"items", items}}},
            {"meta",
             {{"description",
               "9.5 m competition course: sand pit, 4.5 cm square aperture, stairs, unstable cylinders"},
              {"length", 9.5}}}};
}

// Three tunnels laid out side by side; each location starts at a mouth.
json chavin()
{
    json obs = json::array();
    const double w = 0.4;  // half width and half height of the tunnel bore
    const double t = 0.2;  // wall thickness

    // Location 1: straight bore with a rock pile leaving a gap at the roof.
    {
        json walls = json::array();
        const double len = 7.0;
        walls.push_back(wall({-t, -w - t, -t}, {len, w + t, 0.0}));
        walls.push_back(wall({-t, -w - t, 2 * w}, {len, w + t, 2 * w + t}));
        walls.push_back(wall({-t, w, 0.0}, {len, w + t, 2 * w}));
        walls.push_back(wall({-t, -w - t, 0.0}, {len, -w, 2 * w}));
        walls.push_back(wall({len, -w - t, -t}, {len + t, w + t, 2 * w + t}));
        obs.push_back({{"id", "tunnel_1"}, {"type", "tunnel"}, {"walls", walls}, {"estimated", true}});
        obs.push_back(aabb("rocks", "box", {2.5, -w, 0.0}, {3.5, w, 0.55}));
        obs.push_back(aabb("past_rocks", "goal", {3.6, -w, 0.0}, {4.0, w, 2 * w}, false));
        obs.push_back(aabb("tunnel_1_end", "goal", {6.0, -w, 0.0}, {6.6, w, 2 * w}, false));
    }
    // Location 2: bore turning 90 degrees to the right.
    {
        const double y0 = 5.0;
        const double xc = 3.5;  // centre line of the second leg
        const double leg = 2.4;
        json walls = json::array();
        walls.push_back(wall({-t, y0 - leg - t, -t}, {xc + w + t, y0 + w + t, 0.0}));
        walls.push_back(wall({-t, y0 - leg - t, 2 * w}, {xc + w + t, y0 + w + t, 2 * w + t}));
        walls.push_back(wall({-t, y0 + w, 0.0}, {xc + w + t, y0 + w + t, 2 * w}));
        walls.push_back(wall({xc + w, y0 - leg, 0.0}, {xc + w + t, y0 + w, 2 * w}));
        walls.push_back(wall({-t, y0 - w - t, 0.0}, {xc - w, y0 - w, 2 * w}));
        walls.push_back(wall({xc - w - t, y0 - leg, 0.0}, {xc - w, y0 - w - t, 2 * w}));
        walls.push_back(wall({xc - w - t, y0 - leg - t, 0.0}, {xc + w + t, y0 - leg, 2 * w}));
        obs.push_back({{"id", "tunnel_2"}, {"type", "tunnel"}, {"walls", walls}, {"estimated", true}});
        obs.push_back(aabb("turn", "goal", {xc - w, y0 - 1.0, 0.0}, {xc + w, y0 - 0.6, 2 * w}, false));
        obs.push_back(aabb("tunnel_2_end", "goal", {xc - w, y0 - 2.1, 0.0}, {xc + w, y0 - 1.7, 2 * w}, false));
    }
    // Location 3: short horizontal run into a vertical shaft.
    {
        const double y0 = 10.0;
        const double xs = 1.6;  // centre line of the shaft
        const double top = 3.7;
        json walls = json::array();
        walls.push_back(wall({-t, y0 - w - t, -t}, {xs + w + t, y0 + w + t, 0.0}));
        walls.push_back(wall({-t, y0 - w - t, 2 * w}, {xs - w, y0 + w + t, 2 * w + t}));
        walls.push_back(wall({xs + w, y0 - w - t, 0.0}, {xs + w + t, y0 + w + t, top}));
        walls.push_back(wall({xs - w - t, y0 - w - t, 2 * w + t}, {xs - w, y0 + w + t, top}));
        walls.push_back(wall({xs - w - t, y0 - w - t, top}, {xs + w + t, y0 + w + t, top + t}));
        walls.push_back(wall({-t, y0 + w, 0.0}, {xs + w, y0 + w + t, top}));
        walls.push_back(wall({-t, y0 - w - t, 0.0}, {xs + w, y0 - w, top}));
        obs.push_back({{"id", "tunnel_3"}, {"type", "tunnel"}, {"walls", walls}, {"estimated", true}});
        obs.push_back(aabb("shaft", "goal", {xs - w, y0 - w, 2.2}, {xs + w, y0 + w, 2.6}, false));
    }

    json items = json::array();
    items.push_back({{"id", "rock_blockage"}, {"goal", "tunnel_1_end"}, {"location", "rock_blockage"},
                     {"points", 100}, {"whole_body_required", false}});
    items.push_back({{"id", "right_turn"}, {"goal", "tunnel_2_end"}, {"location", "right_turn"},
                     {"points", 100}, {"whole_body_required", false}});
    items.push_back({{"id", "vertical_shaft"}, {"goal", "shaft"}, {"location", "vertical_shaft"},
                     {"points", 100}, {"whole_body_required", false}});

    return {{"format", kCourseFormat},
            {"name", "chavin"},
            {"robot",
             {{"inflated_diameter", 10.5},
              {"body_length", 7.5},
              {"l_ctrl", 1.0},
              {"joystick_length", 1.0},
              {"kappa_retract", 0.2},
              {"p_max", 21.0},
              {"layout", {{"psi", {90.0, 210.0, 330.0}}, {"c", 0.03}}},
              {"growth", {{"p_body_max", 21.0}, {"c_p", 21.0 / 1023.0}, {"body_radius", 3.75}, {"q_max", 470.0}, {"v_max", 10.0}}},
              {"locations", json::array({location("rock_blockage", {0.0, 0.0, w}),
                                         location("right_turn", {0.0, 5.0, w}),
                                         location("vertical_shaft", {0.0, 10.0, w})})}}},
            {"environment",
             {{"bounds", {{"min", {-0.5, -1.0, -0.5}}, {"max", {7.5, 11.0, 4.5}}}},
              {"gravity", {0.0, 0.0, -1.0}},
              {"obstacles", obs}}},
            {"rubric", {{"tip_only_multiplier", 0.5}, {"passage", "tip_only"}, {"time_limit", 1800.0}, {"items", items}}},
            {"meta",
             {{"description",
               "Underground tunnels: a rock blockage (~6 m), a 90 degree right turn (~5 m), a vertical shaft (~3 m)"},
              {"bore", "0.8 m square, estimated"}}}};
}

}  // namespace

std::vector<std::string> builtin_course_names() { return {"robosoft2018", "chavin"}; }

json builtin_course_document(const std::string& name)
{
    if (name == "robosoft2018") return robosoft();
    if (name == "chavin") return chavin();
    throw InvalidInput("unknown built-in course '" + name + "'");
}

Course builtin_course(const std::string& name, const json& defaults)
{
    return load_course(builtin_course_document(name), defaults);
}

}  // namespace vinesim
