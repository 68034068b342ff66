// Intent-consistent reordering: cheapest feasible insertion plus
// precedence-respecting 2-opt, with the originally qualified viewpoints as
// ordered anchors.
#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace visia::tour {

struct TourProblem {
    std::vector<Eigen::Vector3d> positions;  // node id -> position
    int start = 0;                           // current vehicle node, fixed first
    std::vector<int> anchors;                // fixed relative order
    std::optional<int> terminal;             // fixed last node (window exit), if any
};

struct TourSolution {
    std::vector<int> order;  // permutation of node ids, begins at start
    double total_cost = 0.0;
};

double tour_cost(std::span<const int> order, std::span<const Eigen::Vector3d> positions);

TourSolution reorder(const TourProblem& problem);

// Anchors appear in their required relative order, every node exactly once,
// start first and terminal (when set) last.
bool feasible(const TourProblem& problem, std::span<const int> order);

}  // namespace visia::tour
