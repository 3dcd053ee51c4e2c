// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/grouping.hpp"

#include <algorithm>
#include <limits>

#include "splatstyle/error.hpp"

namespace splatstyle {

std::vector<ViewGroup> group_views(const std::vector<Camera>& cameras, int n_views) {
    if (cameras.empty()) throw Error(ErrorCode::EmptyCameraList, "group_views needs at least one camera");
    if (n_views < 1) throw Error(ErrorCode::UsageError, "n_views must be >= 1");

    const int n = static_cast<int>(cameras.size());
    std::vector<Vec3> centers(n);
    for (int i = 0; i < n; ++i) centers[i] = cameras[i].center();

    std::vector<bool> assigned(n, false);
    std::vector<Vec3> centroids;
    std::vector<ViewGroup> groups;
    int remaining = n;

    while (remaining > 0) {
        // seed: unassigned view maximizing the distance to its nearest group
        // centroid; the very first seed is simply the lowest index
        int seed = -1;
        if (centroids.empty()) {
            for (int i = 0; i < n; ++i)
                if (!assigned[i]) {
                    seed = i;
                    break;
                }
        } else {
            double best = -1.0;
            for (int i = 0; i < n; ++i) {
                if (assigned[i]) continue;
                double nearest = std::numeric_limits<double>::infinity();
                for (const Vec3& c : centroids) nearest = std::min(nearest, (centers[i] - c).norm());
                if (nearest > best) {
                    best = nearest;
                    seed = i;
                }
            }
        }

        ViewGroup group;
        group.view_indices.push_back(seed);
        assigned[seed] = true;
        --remaining;

        // attach the n_views - 1 nearest unassigned centers to the seed
        for (int pick = 1; pick < n_views && remaining > 0; ++pick) {
            int best_idx = -1;
            double best_dist = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                if (assigned[i]) continue;
                const double dist = (centers[i] - centers[seed]).norm();
                if (dist < best_dist) {
                    best_dist = dist;
                    best_idx = i;
                }
            }
            group.view_indices.push_back(best_idx);
            assigned[best_idx] = true;
            --remaining;
        }

        std::sort(group.view_indices.begin(), group.view_indices.end());
        Vec3 centroid;
        for (int i : group.view_indices) centroid += centers[i];
        centroids.push_back(centroid * (1.0 / group.view_indices.size()));
        groups.push_back(std::move(group));
    }
    return groups;
}

double mean_within_group_distance(const std::vector<Camera>& cameras,
                                  const std::vector<ViewGroup>& groups) {
    double total = 0.0;
    long pairs = 0;
    for (const ViewGroup& g : groups) {
        for (std::size_t a = 0; a < g.view_indices.size(); ++a)
            for (std::size_t b = a + 1; b < g.view_indices.size(); ++b) {
                total += (cameras[g.view_indices[a]].center() - cameras[g.view_indices[b]].center()).norm();
                ++pairs;
            }
    }
    return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

} // namespace splatstyle
