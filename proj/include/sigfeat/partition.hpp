#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sigfeat/common.hpp"
#include "sigfeat/dataset.hpp"

namespace sigfeat {

enum class Role { Train, Eval, Test };

std::string role_name(Role r);
Role role_from_name(const std::string& s);

struct FoldAssignment {
    std::int64_t instance_id = 0;
    int fold = 0;
    Role role = Role::Train;
};

struct FoldPlan {
    int n_folds = 0;
    std::uint64_t seed = 0;
    // assignments[f] maps instance_id -> role within fold f
    std::vector<std::map<std::int64_t, Role>> assignments;

    std::vector<std::int64_t> ids_with_role(int fold, Role role) const;
};

struct ClusteringResult {
    int k_clusters = 0;
    std::map<std::int64_t, int> assignment;  // instance_id -> cluster
    double silhouette = 0.0;
};

// 5 folds when the minority class has >= 25 instances, 3 when >= 9, else 2.
int choose_fold_count(const SignalDataset& dataset);

// Mean silhouette over all points; Euclidean distance, singletons score 0.
double silhouette_score(const std::vector<std::vector<double>>& vectors,
                        const std::vector<int>& assignment);

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 100;
    std::size_t silhouette_sample_cap = 500;
};

// Seeded k-means over a k range; returns the k with best mean silhouette
// (ties resolved toward smaller k).
ClusteringResult cluster_instances(const std::vector<std::vector<double>>& vectors,
                                   const std::vector<std::int64_t>& instance_ids, int k_min, int k_max,
                                   std::uint64_t seed, const KMeansOptions& opts = {});

// 16-dim per-instance summary used as the clustering space: mean, std, RMS,
// min, max, skewness, excess kurtosis, zero-cross rate, 8 octave band energies.
std::vector<double> instance_summary_vector(const SignalInstance& instance, double rate_hz);

FoldPlan build_fold_plan(const SignalDataset& dataset, const ClusteringResult& clustering, int n_folds,
                         std::uint64_t seed);

}  // namespace sigfeat
