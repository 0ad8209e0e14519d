#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sigfeat/common.hpp"

namespace sigfeat {

struct SignalInstance {
    std::vector<double> samples;
    int label = 0;  // 0 or 1
    std::int64_t instance_id = 0;
};

struct SignalDataset {
    std::vector<SignalInstance> instances;
    double sampling_rate_hz = 0.0;
    std::string name;

    std::size_t count_label(int label) const;
    // throws DataError when any invariant is violated
    void validate() const;
};

struct WindowPlan {
    double window_size_s = 0.0;
    double overlap_fraction = 0.0;

    std::size_t window_length_samples(double rate_hz) const;
    std::size_t hop_samples(double rate_hz) const;
};

struct WindowedSegment {
    std::int64_t instance_id = 0;
    std::size_t window_index = 0;
    std::size_t start_sample = 0;
    std::vector<double> samples;
};

// One class's generative recipe for synthesize_dataset.
struct ToneSpec {
    double freq_hz = 0.0;
    double amplitude = 1.0;
};

struct ClassSynthesisSpec {
    int label = 0;
    std::vector<ToneSpec> tones;
    double noise_sigma = 0.0;
};

struct SynthesisSpec {
    std::vector<ClassSynthesisSpec> classes;
    std::size_t instances_per_class = 0;
    std::size_t samples_per_instance = 0;
    double sampling_rate_hz = 0.0;
    std::string name = "synthetic";
};

enum class DatasetFormat { WideCsv, Manifest };

SignalDataset load_dataset(const std::string& path, DatasetFormat format);
void write_dataset(const SignalDataset& ds, const std::string& csv_path);

std::vector<WindowedSegment> window_instance(const SignalInstance& instance, const WindowPlan& plan,
                                             double rate_hz);

SignalDataset synthesize_dataset(const SynthesisSpec& spec, std::uint64_t seed);

}  // namespace sigfeat
