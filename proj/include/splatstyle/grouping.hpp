// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "splatstyle/scene.hpp"

namespace splatstyle {

struct ViewGroup {
    std::vector<int> view_indices; // ascending
};

// Partitions views into disjoint groups of up to n_views members by camera
// center distance. Greedy: seed with the view farthest from all existing
// group centroids (first round: lowest index), attach its n_views-1 nearest
// unassigned neighbors, repeat. Ties break toward the lower view index.
std::vector<ViewGroup> group_views(const std::vector<Camera>& cameras, int n_views);

// Mean pairwise camera-center distance inside each group, averaged over all
// within-group pairs. Used for reporting and the partition-quality checks.
double mean_within_group_distance(const std::vector<Camera>& cameras,
                                  const std::vector<ViewGroup>& groups);

} // namespace splatstyle
