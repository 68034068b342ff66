#include "visia/tour.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace visia::tour {

double tour_cost(std::span<const int> order, std::span<const Eigen::Vector3d> positions) {
    if (order.empty()) throw std::invalid_argument("empty tour");
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        c += (positions[order[i + 1]] - positions[order[i]]).norm();
    }
    return c;
}

bool feasible(const TourProblem& problem, std::span<const int> order) {
    if (order.size() != problem.positions.size()) return false;
    std::vector<int> pos(problem.positions.size(), -1);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] < 0 || order[i] >= static_cast<int>(pos.size())) return false;
        if (pos[order[i]] != -1) return false;
        pos[order[i]] = static_cast<int>(i);
    }
    if (order.front() != problem.start) return false;
    if (problem.terminal && order.back() != *problem.terminal) return false;
    for (std::size_t i = 0; i + 1 < problem.anchors.size(); ++i) {
        if (pos[problem.anchors[i]] > pos[problem.anchors[i + 1]]) return false;
    }
    return true;
}

namespace {

// 2-opt reversal keeps precedence iff the reversed span holds at most one
// ordered node (anchor or terminal).
bool segment_reversible(const std::vector<int>& order, const std::vector<bool>& ordered_node,
                        std::size_t i, std::size_t j) {
    int count = 0;
    for (std::size_t k = i; k <= j; ++k) {
        if (ordered_node[order[k]] && ++count > 1) return false;
    }
    return true;
}

}  // namespace

TourSolution reorder(const TourProblem& problem) {
    const auto& pts = problem.positions;
    const int n = static_cast<int>(pts.size());
    if (n == 0) throw std::invalid_argument("empty tour problem");

    std::vector<bool> placed(n, false);
    std::vector<int> order;
    order.push_back(problem.start);
    placed[problem.start] = true;
    for (const int a : problem.anchors) {
        if (placed[a]) continue;  // start may coincide with the first anchor
        order.push_back(a);
        placed[a] = true;
    }
    if (problem.terminal && !placed[*problem.terminal]) {
        order.push_back(*problem.terminal);
        placed[*problem.terminal] = true;
    }

    // Cheapest feasible insertion of the free nodes, in node-id order; no slot
    // after the terminal.
    for (int v = 0; v < n; ++v) {
        if (placed[v]) continue;
        double best_delta = std::numeric_limits<double>::infinity();
        std::size_t best_slot = 1;
        const std::size_t max_slot = problem.terminal ? order.size() - 1 : order.size();
        for (std::size_t slot = 1; slot <= max_slot; ++slot) {
            const Eigen::Vector3d& prev = pts[order[slot - 1]];
            double delta = (pts[v] - prev).norm();
            if (slot < order.size()) {
                const Eigen::Vector3d& next = pts[order[slot]];
                delta += (next - pts[v]).norm() - (next - prev).norm();
            }
            if (delta < best_delta) {
                best_delta = delta;
                best_slot = slot;
            }
        }
        order.insert(order.begin() + best_slot, v);
        placed[v] = true;
    }

    // Precedence-respecting 2-opt until no improving move, bounded at 200 passes.
    std::vector<bool> ordered_node(n, false);
    for (const int a : problem.anchors) ordered_node[a] = true;
    if (problem.terminal) ordered_node[*problem.terminal] = true;
    const std::size_t last = order.size() - 1;
    for (int pass = 0; pass < 200; ++pass) {
        bool improved = false;
        for (std::size_t i = 1; i + 1 <= last; ++i) {
            const std::size_t j_max = problem.terminal ? last - 1 : last;
            for (std::size_t j = i + 1; j <= j_max; ++j) {
                const int a = order[i - 1];
                const int b = order[i];
                const int c = order[j];
                const int d = (j + 1 <= last) ? order[j + 1] : -1;
                double delta = (pts[c] - pts[a]).norm() - (pts[b] - pts[a]).norm();
                if (d >= 0) delta += (pts[b] - pts[d]).norm() - (pts[c] - pts[d]).norm();
                if (delta >= -1e-12) continue;
                if (!segment_reversible(order, ordered_node, i, j)) continue;
                std::reverse(order.begin() + i, order.begin() + j + 1);
                improved = true;
            }
        }
        if (!improved) break;
    }

    TourSolution sol;
    sol.order = std::move(order);
    sol.total_cost = tour_cost(sol.order, pts);
    return sol;
}

}  // namespace visia::tour
