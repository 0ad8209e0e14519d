#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sigfeat/features.hpp"

namespace sigfeat {

// Provenance predicate: all present fields must match.
struct WeightSelector {
    std::optional<std::string> domain;
    std::optional<std::string> transform;
    std::optional<std::string> statistic;
    std::optional<int> level;

    bool matches(const ProvenanceRecord& rec) const;
    std::string describe() const;
};

struct WeightEntry {
    WeightSelector selector;
    double weight = 1.0;  // (0, 10]
};

struct ExpertWeights {
    std::vector<WeightEntry> entries;

    // product of all matching entry weights (1.0 when none match)
    double weight_for(const ProvenanceRecord& rec) const;

    // indices of entries that match no record in the table
    std::vector<std::size_t> unmatched(const MappingTable& table) const;

    void validate() const;
    bool all_neutral() const;
};

}  // namespace sigfeat
