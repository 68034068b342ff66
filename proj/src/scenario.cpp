#include "visia/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace visia::world {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
    throw ScenarioError(field, msg);
}

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(where.empty() ? "scenario" : where, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
    }
}

const json& get_array(const json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array");
    return j;
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

Eigen::Vector3d get_vec3(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) fail(field, "expected [x, y, z]");
    return {get_number(j[0], field), get_number(j[1], field), get_number(j[2], field)};
}

Eigen::Vector3i get_ivec3(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) fail(field, "expected [i, j, k]");
    for (const auto& c : j) {
        if (!c.is_number_integer()) fail(field, "expected integer voxel indices");
    }
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

Box get_box(const json& j, const std::string& field) {
    check_keys(j, field, {"min", "max"});
    if (!j.contains("min") || !j.contains("max")) fail(field, "box needs min and max");
    Box b{get_vec3(j["min"], field + ".min"), get_vec3(j["max"], field + ".max")};
    for (int i = 0; i < 3; ++i) {
        if (b.min[i] >= b.max[i]) fail(field, "box min must be below max");
    }
    return b;
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
json ivec3_json(const Eigen::Vector3i& v) { return json::array({v.x(), v.y(), v.z()}); }

json box_json(const Box& b) {
    return json{{"min", vec3_json(b.min)}, {"max", vec3_json(b.max)}};
}

Scenario parse_scenario(const json& j) {
    if (!j.is_object()) fail("", "scenario must be a JSON object");
    check_keys(j, "", {"resolution", "bounds", "target", "obstacles", "nominal_path", "camera",
                       "limits", "lidar_range", "seed"});

    Scenario s;
    if (j.contains("resolution")) s.resolution = get_number(j["resolution"], "resolution");
    if (s.resolution <= 0.0) fail("resolution", "must be positive");

    if (!j.contains("bounds")) fail("bounds", "missing");
    check_keys(j["bounds"], "bounds", {"min", "max"});
    s.bounds.min = get_vec3(j["bounds"]["min"], "bounds.min");
    s.bounds.max = get_vec3(j["bounds"]["max"], "bounds.max");
    for (int i = 0; i < 3; ++i) {
        if (s.bounds.min[i] >= s.bounds.max[i]) fail("bounds", "min must be below max");
    }

    if (!j.contains("target")) fail("target", "missing");
    check_keys(j["target"], "target", {"boxes", "voxel_list"});
    if (j["target"].contains("boxes")) {
        int i = 0;
        for (const auto& bj : get_array(j["target"]["boxes"], "target.boxes")) {
            s.target_boxes.push_back(get_box(bj, "target.boxes[" + std::to_string(i++) + "]"));
        }
    }
    if (j["target"].contains("voxel_list")) {
        int i = 0;
        for (const auto& vj : get_array(j["target"]["voxel_list"], "target.voxel_list")) {
            s.target_voxels.push_back(
                get_ivec3(vj, "target.voxel_list[" + std::to_string(i++) + "]"));
        }
    }
    if (s.target_boxes.empty() && s.target_voxels.empty()) fail("target", "empty target");

    if (j.contains("obstacles")) {
        int i = 0;
        for (const auto& oj : get_array(j["obstacles"], "obstacles")) {
            const std::string where = "obstacles[" + std::to_string(i++) + "]";
            check_keys(oj, where, {"id", "boxes", "voxel_list", "trigger"});
            ObstacleSet o;
            if (!oj.contains("id") || !oj["id"].is_string()) fail(where + ".id", "missing id");
            o.id = oj["id"].get<std::string>();
            if (oj.contains("boxes")) {
                int k = 0;
                for (const auto& bj : get_array(oj["boxes"], where + ".boxes")) {
                    o.boxes.push_back(get_box(bj, where + ".boxes[" + std::to_string(k++) + "]"));
                }
            }
            if (oj.contains("voxel_list")) {
                int k = 0;
                for (const auto& vj : get_array(oj["voxel_list"], where + ".voxel_list")) {
                    o.voxels.push_back(
                        get_ivec3(vj, where + ".voxel_list[" + std::to_string(k++) + "]"));
                }
            }
            if (o.boxes.empty() && o.voxels.empty()) fail(where, "empty obstacle set");
            if (!oj.contains("trigger")) fail(where + ".trigger", "missing");
            check_keys(oj["trigger"], where + ".trigger", {"type", "param"});
            const std::string type = oj["trigger"].value("type", "");
            if (type == "always") {
                o.trigger = TriggerType::Always;
            } else if (type == "distance") {
                o.trigger = TriggerType::Distance;
            } else {
                fail(where + ".trigger.type", "expected 'always' or 'distance'");
            }
            if (oj["trigger"].contains("param")) {
                o.trigger_param = get_number(oj["trigger"]["param"], where + ".trigger.param");
            }
            s.obstacles.push_back(std::move(o));
        }
    }

    std::set<std::string> ids;
    for (const auto& o : s.obstacles) {
        if (!ids.insert(o.id).second) fail("obstacles", "duplicate obstacle id '" + o.id + "'");
    }

    if (!j.contains("nominal_path")) fail("nominal_path", "missing");
    int i = 0;
    for (const auto& nj : get_array(j["nominal_path"], "nominal_path")) {
        const std::string where = "nominal_path[" + std::to_string(i++) + "]";
        check_keys(nj, where, {"p", "theta_deg", "psi_deg", "kind"});
        PathNode node;
        if (!nj.contains("p")) fail(where + ".p", "missing");
        node.config.p = get_vec3(nj["p"], where + ".p");
        node.config.theta = geom::deg2rad(get_number(nj.value("theta_deg", json(0.0)),
                                                     where + ".theta_deg"));
        node.config.psi =
            geom::normalize_angle(geom::deg2rad(get_number(nj.value("psi_deg", json(0.0)),
                                                           where + ".psi_deg")));
        const std::string kind = nj.value("kind", "waypoint");
        if (kind == "viewpoint") {
            node.kind = NodeKind::Viewpoint;
        } else if (kind == "waypoint") {
            node.kind = NodeKind::Waypoint;
        } else {
            fail(where + ".kind", "expected 'viewpoint' or 'waypoint'");
        }
        if (node.config.theta < geom::kPitchMin - 1e-9 ||
            node.config.theta > geom::kPitchMax + 1e-9) {
            fail(where + ".theta_deg", "pitch outside gimbal limits [-80, +30]");
        }
        s.nominal_path.nodes.push_back(std::move(node));
    }
    if (s.nominal_path.viewpoint_indices().empty()) {
        fail("nominal_path", "path needs at least one viewpoint");
    }
    for (int n = 0; n < s.nominal_path.size(); ++n) {
        const auto& p = s.nominal_path.nodes[n].config.p;
        for (int c = 0; c < 3; ++c) {
            if (p[c] < s.bounds.min[c] || p[c] >= s.bounds.max[c]) {
                fail("nominal_path[" + std::to_string(n) + "].p", "outside bounds");
            }
        }
    }

    if (!j.contains("camera")) fail("camera", "missing");
    check_keys(j["camera"], "camera", {"alpha_h_deg", "alpha_v_deg", "r_max"});
    s.camera.alpha_h = geom::deg2rad(get_number(j["camera"].value("alpha_h_deg", json(80.0)),
                                                "camera.alpha_h_deg"));
    s.camera.alpha_v = geom::deg2rad(get_number(j["camera"].value("alpha_v_deg", json(65.0)),
                                                "camera.alpha_v_deg"));
    if (!j["camera"].contains("r_max")) fail("camera.r_max", "missing");
    s.camera.r_max = get_number(j["camera"]["r_max"], "camera.r_max");
    if (!s.camera.valid()) fail("camera", "invalid FoV/range parameters");

    if (j.contains("limits")) {
        check_keys(j["limits"], "limits", {"v_max", "omega_max_deg"});
        if (j["limits"].contains("v_max")) {
            s.limits.v_max = get_number(j["limits"]["v_max"], "limits.v_max");
        }
        if (j["limits"].contains("omega_max_deg")) {
            s.limits.omega_max =
                geom::deg2rad(get_number(j["limits"]["omega_max_deg"], "limits.omega_max_deg"));
        }
    }
    if (s.limits.v_max <= 0.0) fail("limits.v_max", "must be positive");
    if (s.limits.omega_max <= 0.0) fail("limits.omega_max_deg", "must be positive");

    if (j.contains("lidar_range")) s.lidar_range = get_number(j["lidar_range"], "lidar_range");
    if (s.lidar_range <= 0.0) fail("lidar_range", "must be positive");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
            fail("seed", "expected an integer");
        }
        s.seed = j["seed"].get<std::uint64_t>();
    }
    return s;
}

json scenario_json(const Scenario& s) {
    json j;
    j["resolution"] = s.resolution;
    j["bounds"] = {{"min", vec3_json(s.bounds.min)}, {"max", vec3_json(s.bounds.max)}};
    json target;
    if (!s.target_boxes.empty()) {
        target["boxes"] = json::array();
        for (const auto& b : s.target_boxes) target["boxes"].push_back(box_json(b));
    }
    if (!s.target_voxels.empty()) {
        target["voxel_list"] = json::array();
        for (const auto& v : s.target_voxels) target["voxel_list"].push_back(ivec3_json(v));
    }
    j["target"] = target;
    j["obstacles"] = json::array();
    for (const auto& o : s.obstacles) {
        json oj;
        oj["id"] = o.id;
        if (!o.boxes.empty()) {
            oj["boxes"] = json::array();
            for (const auto& b : o.boxes) oj["boxes"].push_back(box_json(b));
        }
        if (!o.voxels.empty()) {
            oj["voxel_list"] = json::array();
            for (const auto& v : o.voxels) oj["voxel_list"].push_back(ivec3_json(v));
        }
        oj["trigger"] = {{"type", o.trigger == TriggerType::Always ? "always" : "distance"}};
        if (std::isfinite(o.trigger_param)) oj["trigger"]["param"] = o.trigger_param;
        j["obstacles"].push_back(oj);
    }
    j["nominal_path"] = json::array();
    for (const auto& n : s.nominal_path.nodes) {
        j["nominal_path"].push_back(
            {{"p", vec3_json(n.config.p)},
             {"theta_deg", geom::rad2deg(n.config.theta)},
             {"psi_deg", geom::rad2deg(n.config.psi)},
             {"kind", n.kind == NodeKind::Viewpoint ? "viewpoint" : "waypoint"}});
    }
    j["camera"] = {{"alpha_h_deg", geom::rad2deg(s.camera.alpha_h)},
                   {"alpha_v_deg", geom::rad2deg(s.camera.alpha_v)},
                   {"r_max", s.camera.r_max}};
    j["limits"] = {{"v_max", s.limits.v_max},
                   {"omega_max_deg", geom::rad2deg(s.limits.omega_max)}};
    j["lidar_range"] = s.lidar_range;
    j["seed"] = s.seed;
    return j;
}

void stamp_boxes(VoxelGrid& grid, const std::vector<Box>& boxes, VoxelState state,
                 const std::string& field) {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const Box& b = boxes[i];
        const Eigen::Vector3i lo = grid.voxel_of(b.min.cwiseMax(grid.bounds().min));
        Eigen::Vector3d hi_pt = b.max.cwiseMin(grid.bounds().max);
        // Pull the upper corner just inside so boundary-aligned boxes stay in range.
        hi_pt -= Eigen::Vector3d::Constant(grid.resolution() * 1e-6);
        const Eigen::Vector3i hi = grid.voxel_of(hi_pt);
        Eigen::Vector3i v;
        bool any = false;
        for (v.x() = lo.x(); v.x() <= hi.x(); ++v.x()) {
            for (v.y() = lo.y(); v.y() <= hi.y(); ++v.y()) {
                for (v.z() = lo.z(); v.z() <= hi.z(); ++v.z()) {
                    if (!grid.index_in_bounds(v)) continue;
                    // Box membership by voxel center.
                    const Eigen::Vector3d c = grid.center_of(v);
                    bool inside = true;
                    for (int k = 0; k < 3; ++k) {
                        if (c[k] < b.min[k] || c[k] > b.max[k]) inside = false;
                    }
                    if (!inside) continue;
                    grid.set_state(v, state);
                    any = true;
                }
            }
        }
        if (!any) fail(field + "[" + std::to_string(i) + "]", "box covers no voxel");
    }
}

std::vector<Eigen::Vector3i> obstacle_voxel_list(const VoxelGrid& grid, const ObstacleSet& o,
                                                 const std::string& field) {
    std::vector<Eigen::Vector3i> out;
    VoxelGrid scratch(grid.bounds(), grid.resolution());
    stamp_boxes(scratch, o.boxes, VoxelState::Obstacle, field + ".boxes");
    for (std::size_t i = 0; i < o.voxels.size(); ++i) {
        if (!scratch.index_in_bounds(o.voxels[i])) {
            fail(field + ".voxel_list[" + std::to_string(i) + "]", "outside bounds");
        }
        scratch.set_state(o.voxels[i], VoxelState::Obstacle);
    }
    scratch.for_each_occupied([&](const Eigen::Vector3i& v, VoxelState) { out.push_back(v); });
    return out;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("file", "cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail("file", std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(j);
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail("file", "cannot open '" + path.string() + "' for writing");
    out << scenario_json(s).dump(2) << "\n";
}

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("file", std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(j);
}

std::string scenario_to_json_text(const Scenario& s) { return scenario_json(s).dump(2); }

bool scenario_equal(const Scenario& a, const Scenario& b) {
    return scenario_json(a) == scenario_json(b);
}

World build_world(const Scenario& s) {
    World w;
    w.lidar_range = s.lidar_range;
    w.online = VoxelGrid(s.bounds, s.resolution);

    stamp_boxes(w.online, s.target_boxes, VoxelState::Target, "target.boxes");
    for (std::size_t i = 0; i < s.target_voxels.size(); ++i) {
        if (!w.online.index_in_bounds(s.target_voxels[i])) {
            fail("target.voxel_list[" + std::to_string(i) + "]", "outside bounds");
        }
        w.online.set_state(s.target_voxels[i], VoxelState::Target);
    }
    w.surface = extract_surface(w.online);
    if (w.surface.elements.empty()) fail("target", "target has no observable surface");

    // Hidden obstacle bookkeeping; reject overlap with the target so reveal
    // never flips labels.
    for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
        const std::string field = "obstacles[" + std::to_string(i) + "]";
        HiddenSet h;
        h.id = s.obstacles[i].id;
        h.trigger = s.obstacles[i].trigger;
        h.trigger_param = s.obstacles[i].trigger_param;
        h.voxels = obstacle_voxel_list(w.online, s.obstacles[i], field);
        for (const auto& v : h.voxels) {
            if (w.online.state(v) == VoxelState::Target) {
                fail(field, "obstacle overlaps the target");
            }
        }
        h.revealed.assign(h.voxels.size(), false);
        w.hidden.push_back(std::move(h));
    }

    // Truth grid: target plus every obstacle, revealed or not.
    w.truth = w.online;
    for (const auto& h : w.hidden) {
        for (const auto& v : h.voxels) w.truth.set_state(v, VoxelState::Obstacle);
    }

    // Intended subsets on the target-only map: elements inside the frustum that
    // are also ray-visible at plan time (self-occluded elements were never part
    // of the plan's deliverable).
    w.nominal = s.nominal_path;
    for (auto& node : w.nominal.nodes) {
        if (node.kind != NodeKind::Viewpoint) continue;
        node.intended.clear();
        const geom::HalfSpaceSet hs = geom::make_frustum(node.config, s.camera);
        for (const auto& v : w.online.voxel_indices_in_frustum(hs, Label::Target)) {
            const int eid = w.surface.element_at(w.online, v);
            if (eid < 0) continue;
            const auto hit = w.online.raycast(node.config.p, w.surface.elements[eid].pos,
                                              Label::Any);
            if (!hit.blocked) node.intended.push_back(eid);
        }
        std::sort(node.intended.begin(), node.intended.end());
    }
    for (int i = 0; i < w.nominal.size(); ++i) {
        const auto& node = w.nominal.nodes[i];
        if (node.kind == NodeKind::Viewpoint && node.intended.empty()) {
            fail("nominal_path[" + std::to_string(i) + "]",
                 "viewpoint has an empty intended subset");
        }
    }

    // Always-visible sets are part of the map from the start.
    for (auto& h : w.hidden) {
        if (h.trigger != TriggerType::Always) continue;
        for (std::size_t k = 0; k < h.voxels.size(); ++k) {
            w.online.set_state(h.voxels[k], VoxelState::Obstacle);
            h.revealed[k] = true;
        }
        h.revealed_count = h.voxels.size();
    }
    return w;
}

int reveal(World& w, const Eigen::Vector3d& sensor) {
    // Collect first against the entry snapshot, then apply, so voxels revealed
    // in this pass do not occlude each other.
    std::vector<std::pair<std::size_t, std::size_t>> newly;  // (set, voxel) indices
    for (std::size_t si = 0; si < w.hidden.size(); ++si) {
        HiddenSet& h = w.hidden[si];
        if (h.revealed_count == h.voxels.size()) continue;
        const double range = std::min(w.lidar_range, h.trigger == TriggerType::Distance
                                                         ? h.trigger_param
                                                         : w.lidar_range);
        for (std::size_t k = 0; k < h.voxels.size(); ++k) {
            if (h.revealed[k]) continue;
            const Eigen::Vector3d c = w.online.center_of(h.voxels[k]);
            if ((c - sensor).norm() > range) continue;
            if (w.online.raycast(sensor, c, Label::Any).blocked) continue;
            newly.emplace_back(si, k);
        }
    }
    for (const auto& [si, k] : newly) {
        HiddenSet& h = w.hidden[si];
        w.online.set_state(h.voxels[k], VoxelState::Obstacle);
        h.revealed[k] = true;
        ++h.revealed_count;
    }
    return static_cast<int>(newly.size());
}

}  // namespace visia::world
