#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sigfeat/common.hpp"
#include "sigfeat/dataset.hpp"
#include "sigfeat/features.hpp"
#include "sigfeat/info.hpp"
#include "sigfeat/models.hpp"
#include "sigfeat/partition.hpp"
#include "sigfeat/weights.hpp"

namespace sigfeat {

struct SelectionConfig {
    std::size_t k = 10;            // recommended-set cardinality, hard cap 20
    std::uint64_t c = 1ULL << 20;  // subset-evaluation budget regularizing k
    double tau = 0.98;             // escalation threshold on the chosen metric
    Metric metric = Metric::Accuracy;
    std::size_t prefilter_p = 2000;
    std::size_t bins = 0;          // 0 = AUTO equal-frequency bin count
    TuningBudget tuning;
    ExpertWeights expert_weights;

    void validate() const;
};

// Greedy max-relevance min-redundancy order over discrete columns.
// relevance_weights multiply the relevance term; ties break to lower index.
std::vector<std::size_t> mrmr_rank(const std::vector<std::vector<int>>& columns,
                                   const std::vector<int>& y, std::size_t m,
                                   const std::vector<double>& relevance_weights);

// Rough-set dependency: fraction of rows whose value tuple under S maps to a
// single class.
double rough_set_gamma(const std::vector<std::vector<int>>& columns,
                       const std::vector<std::size_t>& subset, const std::vector<int>& y);

// Greedy max-relevance max-significance order (crisp rough-set dependency).
std::vector<std::size_t> mrms_rank(const std::vector<std::vector<int>>& columns,
                                   const std::vector<int>& y, std::size_t m,
                                   const std::vector<double>& relevance_weights);

// ---- fold-level machinery ----------------------------------------------------

// A feature subset identified by canonical provenance keys (stable across
// folds). The records carry full provenance so the subset can be
// materialized on folds whose pool lacks a key (fold-local ratio features).
struct CandidateSubset {
    std::vector<std::string> keys;  // sorted
    std::vector<ProvenanceRecord> records;  // aligned with keys
    bool operator==(const CandidateSubset& other) const { return keys == other.keys; }
};

struct StageRankings {
    int fold = 0;
    int level = 1;
    std::vector<std::string> mrmr_order;
    std::vector<std::string> mrms_order;
    std::vector<std::string> union_keys;
    std::vector<std::string> wrapper_ranked;
};

struct LevelSelection {
    StageRankings rankings;
    std::vector<std::int64_t> ranked_ids;       // wrapper-ranked k (fold-local ids)
    CandidateSubset best_subset;
    double best_subset_score = 0.0;
    bool greedy_fallback = false;
    // memoized exhaustive scores indexed by bit mask over ranked_ids
    std::vector<double> subset_scores;
};

// Per-fold training view over a pool (standardized columns, label vectors).
struct FoldView {
    int fold = 0;
    const FeaturePool* pool = nullptr;
    std::vector<std::size_t> train_rows, eval_rows, test_rows;
    std::vector<int> y_train, y_eval, y_test;
    Matrix std_values;  // all rows, columns standardized with Train statistics

    static FoldView make(const FeaturePool& pool, const SignalDataset& dataset,
                         const FoldPlan& plan, int fold);
    Matrix rows_cols(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const;
    // resolve canonical keys to columns, materializing missing ratio columns
    // from their parents when necessary
    std::vector<double> column_for_key(const std::string& key) const;
};

// Classifier specs fixed for a (fold, level) pass: tuned once on the union
// set, reused for every wrapper evaluation in that pass.
struct WrapperSpecs {
    std::array<ClassifierSpec, 3> specs;
};

double wrapper_score(const FoldView& view, const std::vector<std::size_t>& columns,
                     const WrapperSpecs& specs, Metric metric);

LevelSelection select_for_level(const FeaturePool& pool, int level, const FoldView& view,
                                const SelectionConfig& config, std::uint64_t seed, unsigned threads);

// ---- whole-run recommendation -------------------------------------------------

struct SubsetOutcome {
    CandidateSubset subset;
    std::vector<double> eval_by_fold;
    std::vector<MetricReport> test_by_fold;
    std::vector<std::string> test_classifier_by_fold;
    double best_fold_value = 0.0;
    double min_fold_value = 0.0;
    double mean_fold_value = 0.0;
};

struct RecommendationResult {
    SubsetOutcome fe1, fe2;
    int level_reached = 1;
    std::vector<StageRankings> rankings;          // every fold x computed level
    std::array<int, 3> pools_built_by_level{};    // instrumentation
    std::array<int, 3> selections_by_level{};
    std::vector<double> best_score_by_level;      // per computed level
    std::string selected_wavelet_by_fold_json;    // fold -> wavelet echo
    std::map<int, std::string> selected_wavelets; // fold -> wavelet
    std::uint64_t seed = 0;
    Metric metric = Metric::Accuracy;
};

RecommendationResult recommend(const SignalDataset& dataset, const FoldPlan& fold_plan,
                               const SelectionConfig& sel_config, const FeatureConfig& feat_config,
                               std::uint64_t seed, unsigned threads = 1);

}  // namespace sigfeat
