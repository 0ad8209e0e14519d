#pragma once

#include <cstdint>
#include <vector>

#include "sigfeat/common.hpp"

namespace sigfeat {

// Equal-frequency discretizer fit on training values; ties share a bin and
// out-of-range values clamp to the edge bins.
struct Discretizer {
    std::vector<double> upper_edges;  // bin b covers (edge[b-1], edge[b]]

    static Discretizer fit(const std::vector<double>& train_values, std::size_t bins);
    int bin_of(double v) const;
    std::vector<int> apply(const std::vector<double>& values) const;
    std::size_t bin_count() const { return upper_edges.size() + 1; }
};

// AUTO bin count: max(2, min(16, floor(sqrt(n_train / 5)))).
std::size_t auto_bin_count(std::size_t n_train);

// Plug-in mutual information estimate in nats over discrete vectors,
// computed as sum p(a,b) * (ln p(a,b) - ln p(a) - ln p(b)).
double mutual_information(const std::vector<int>& x, const std::vector<int>& y);

// Shannon entropy in nats of a discrete vector.
double discrete_entropy(const std::vector<int>& x);

}  // namespace sigfeat
