// Scan path representation shared by the planner stack: ordered 5-DoF nodes
// tagged viewpoint/waypoint, with intended-subset attachments on viewpoints.
#pragma once

#include "visia/geom.hpp"

#include <vector>

namespace visia {

enum class NodeKind { Viewpoint, Waypoint };

struct PathNode {
    geom::CameraConfig config;
    NodeKind kind = NodeKind::Waypoint;
    std::vector<int> intended;  // surface element ids; meaningful for viewpoints
};

struct ScanPath {
    std::vector<PathNode> nodes;

    int size() const { return static_cast<int>(nodes.size()); }
    bool empty() const { return nodes.empty(); }

    std::vector<int> viewpoint_indices() const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i) {
            if (nodes[i].kind == NodeKind::Viewpoint) out.push_back(i);
        }
        return out;
    }
};

}  // namespace visia
