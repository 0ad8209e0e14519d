#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sigfeat/common.hpp"
#include "sigfeat/dataset.hpp"
#include "sigfeat/partition.hpp"
#include "sigfeat/transforms.hpp"

namespace sigfeat {

enum class FeatureDomain { Time, Frequency, Wavelet };
enum class FeatureTransform { None, Stft, Dwt };

std::string domain_name(FeatureDomain d);
std::string transform_name(FeatureTransform t);

constexpr int kWindowAll = -1;

// Full genesis description of one feature column. Everything needed to
// recompute the value from the raw signal lives here.
struct ProvenanceRecord {
    std::int64_t feature_id = -1;
    int level = 1;  // 1..3
    FeatureDomain domain = FeatureDomain::Time;
    FeatureTransform transform = FeatureTransform::None;

    // transform parameters
    double window_size_s = 0.0;
    double overlap_fraction = 0.0;
    std::size_t n_fft = 0;
    std::string wavelet_key;   // identity token: "auto" or a concrete name
    std::string wavelet_name;  // concrete mother wavelet used in this pool

    // location in the transformed vector
    int bin_index = -1;        // STFT bin
    double frequency_hz = -1.0;
    int dwt_level = 0;         // 1..L for detail sub-bands
    double pseudo_freq_hz = -1.0;

    std::string statistic;         // registry key, e.g. "mean", "stft_bin", "skewness"
    std::string source_statistic;  // level-3 derivatives: the level-2 statistic differenced
    std::string carrier;           // "raw", "stft", "dwt" (level-2 statistics)
    int window_index = kWindowAll;
    std::string aggregation;       // "mean"/"min"/"max"/"std" for window_index == ALL

    std::vector<std::string> parent_keys;  // level-3 lineage
    std::vector<std::string> flags;        // degeneracy / replacement diagnostics

    // Stable identity across folds and reruns; ids are assigned in
    // canonical-key order.
    std::string canonical_key() const;
};

struct StatisticInfo {
    std::string description;
    std::string value_range;
};

// statistic name -> human description + expected value range
const std::map<std::string, StatisticInfo>& statistic_registry();

struct MappingTable {
    std::vector<ProvenanceRecord> records;  // index == feature_id

    const ProvenanceRecord& by_id(std::int64_t id) const;
    std::optional<std::int64_t> id_of_key(const std::string& canonical_key) const;
};

struct FeatureConfig {
    WindowPlan window;                      // window_size_s <= 0 selects full-signal windows
    std::size_t window_length_override = 0; // samples; 0 = derive from window
    std::size_t n_fft = 0;                  // 0 = next pow2 >= window length
    std::size_t bin_stride = 4;
    std::size_t dwt_levels = 5;             // capped at what the window allows
    bool multi_agg = false;
    std::size_t ratio_top_r = 24;
    std::string wavelet_override;           // force a mother wavelet
    bool wavelet_sweep = false;             // generate all library wavelets
    FftWindow stft_window = FftWindow::Hann;

    std::size_t resolve_window_length(const SignalDataset& ds) const;
    std::size_t resolve_n_fft(std::size_t window_len) const;
};

struct FeaturePool {
    Matrix values;                            // rows follow row_instance_ids
    std::vector<std::int64_t> row_instance_ids;
    MappingTable table;
    std::string selected_wavelet;             // per-fold choice behind "auto"
    int level = 1;
    std::vector<std::int64_t> constant_train_ids;  // excluded from selection

    std::size_t row_of(std::int64_t instance_id) const;
};

// Builds the cumulative level-1..level pool for every instance; the mother
// wavelet is chosen on the given fold's Train segments only.
FeaturePool build_feature_pool(const SignalDataset& dataset, const FoldPlan& fold_plan, int fold,
                               int level, const FeatureConfig& config, unsigned threads = 1);

// Recomputes one cell from its provenance alone (the lineage-replay path
// used by tests and the interpretation module).
double replay_feature(const ProvenanceRecord& record, const MappingTable& table,
                      const SignalInstance& instance, double rate_hz, const FeatureConfig& config,
                      const std::string& selected_wavelet);

}  // namespace sigfeat
