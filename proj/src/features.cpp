#include "sigfeat/features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sigfeat/info.hpp"

namespace sigfeat {

namespace {

constexpr double kRatioEpsilon = 1e-12;

// ---- scalar statistics ------------------------------------------------------

double vec_mean(const std::vector<double>& x) {
    return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double vec_std(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double m = vec_mean(x);
    double v = 0.0;
    for (double xi : x) v += (xi - m) * (xi - m);
    return std::sqrt(v / static_cast<double>(x.size()));
}

double vec_rms(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return std::sqrt(s / static_cast<double>(x.size()));
}

// linear-interpolation quantile on a sorted copy
double vec_quantile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    std::sort(sorted.begin(), sorted.end());
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = static_cast<std::size_t>(std::ceil(h));
    return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

std::size_t zero_cross_count(const std::vector<double>& x) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if ((x[i - 1] >= 0.0) != (x[i] >= 0.0)) ++n;
    return n;
}

double vec_skewness(const std::vector<double>& x, bool* degenerate = nullptr) {
    if (x.size() < 2) return 0.0;
    double m = vec_mean(x);
    double m2 = 0.0, m3 = 0.0;
    for (double xi : x) {
        double d = xi - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m3 /= static_cast<double>(x.size());
    if (m2 <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return m3 / (m2 * std::sqrt(m2));
}

double vec_excess_kurtosis(const std::vector<double>& x, bool* degenerate = nullptr) {
    if (x.size() < 2) return 0.0;
    double m = vec_mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double xi : x) {
        double d = xi - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    if (m2 <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return m4 / (m2 * m2) - 3.0;
}

double vec_energy(const std::vector<double>& x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return s;
}

// Shannon entropy over normalized squared values (same convention as the
// wavelet scoring).
double vec_shannon_entropy(const std::vector<double>& x, bool* degenerate = nullptr) {
    double e = vec_energy(x);
    if (e <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double h = 0.0;
    for (double xi : x) {
        double p = xi * xi / e;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double vec_crest_factor(const std::vector<double>& x, bool* degenerate = nullptr) {
    double r = vec_rms(x);
    if (r <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double peak = 0.0;
    for (double xi : x) peak = std::max(peak, std::abs(xi));
    return peak / r;
}

struct PeakTrough {
    std::vector<std::size_t> peaks;
    std::vector<std::size_t> troughs;
    double mean = 0.0;
};

// peaks: strict local maxima above mean + 0.5 std; troughs mirrored below.
PeakTrough find_peaks(const std::vector<double>& x) {
    PeakTrough pt;
    pt.mean = vec_mean(x);
    double sd = vec_std(x);
    double hi = pt.mean + 0.5 * sd;
    double lo = pt.mean - 0.5 * sd;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > x[i - 1] && x[i] > x[i + 1] && x[i] > hi) pt.peaks.push_back(i);
        if (x[i] < x[i - 1] && x[i] < x[i + 1] && x[i] < lo) pt.troughs.push_back(i);
    }
    return pt;
}

// ---- transform caches -------------------------------------------------------

struct InstanceContext {
    const SignalInstance* instance = nullptr;
    double rate_hz = 0.0;
    std::size_t window_len = 0;
    std::size_t n_fft = 0;
    FftWindow stft_window = FftWindow::Hann;
    WindowPlan plan;
    std::vector<std::vector<double>> windows;
    mutable std::vector<std::optional<Spectrum>> spectra;
    mutable std::map<std::pair<std::string, std::size_t>, WaveletDecomposition> dwt_cache;
    std::size_t dwt_levels = 0;

    const Spectrum& spectrum(std::size_t w) const {
        if (!spectra[w]) spectra[w] = stft_magnitude(windows[w], rate_hz, n_fft, stft_window);
        return *spectra[w];
    }
    const WaveletDecomposition& decomposition(const std::string& wavelet, std::size_t w) const {
        auto key = std::make_pair(wavelet, w);
        auto it = dwt_cache.find(key);
        if (it == dwt_cache.end())
            it = dwt_cache.emplace(key, dwt(windows[w], wavelet, dwt_levels, rate_hz)).first;
        return it->second;
    }
};

InstanceContext make_context(const SignalInstance& inst, double rate_hz, std::size_t window_len,
                             const FeatureConfig& config) {
    InstanceContext ctx;
    ctx.instance = &inst;
    ctx.rate_hz = rate_hz;
    ctx.window_len = window_len;
    ctx.n_fft = config.resolve_n_fft(window_len);
    ctx.stft_window = config.stft_window;
    ctx.plan = config.window;
    ctx.dwt_levels = std::min(config.dwt_levels, max_dwt_levels(window_len));

    WindowPlan plan = config.window;
    std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(window_len) *
                                                 (1.0 - plan.overlap_fraction))));
    for (std::size_t start = 0; start + window_len <= inst.samples.size(); start += hop)
        ctx.windows.emplace_back(inst.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                 inst.samples.begin() + static_cast<std::ptrdiff_t>(start + window_len));
    if (ctx.windows.empty())
        throw DataError("instance " + std::to_string(inst.instance_id) + " shorter than window");
    ctx.spectra.resize(ctx.windows.size());
    return ctx;
}

// ---- per-window evaluation ---------------------------------------------------

const std::vector<double>& carrier_vector(const InstanceContext& ctx, const ProvenanceRecord& rec,
                                          std::size_t w, std::vector<double>& scratch) {
    if (rec.carrier == "raw") return ctx.windows[w];
    if (rec.carrier == "stft") return ctx.spectrum(w).magnitudes;
    if (rec.carrier == "dwt") {
        const auto& dec = ctx.decomposition(rec.wavelet_name, w);
        return dec.detail_coeffs[static_cast<std::size_t>(rec.dwt_level - 1)];
    }
    scratch.clear();
    return scratch;
}

double eval_statistic_at_window(const InstanceContext& ctx, const ProvenanceRecord& rec, std::size_t w,
                                bool* degenerate) {
    const std::string& s = rec.statistic;
    std::vector<double> scratch;

    // level-1 time-domain basics
    if (s == "mean") return vec_mean(ctx.windows[w]);
    if (s == "std") return vec_std(ctx.windows[w]);
    if (s == "rms") return vec_rms(ctx.windows[w]);
    if (s == "min") return *std::min_element(ctx.windows[w].begin(), ctx.windows[w].end());
    if (s == "max") return *std::max_element(ctx.windows[w].begin(), ctx.windows[w].end());
    if (s == "median") return vec_quantile(ctx.windows[w], 0.5);
    if (s == "zero_cross_count") return static_cast<double>(zero_cross_count(ctx.windows[w]));

    if (s == "stft_bin") return ctx.spectrum(w).magnitudes[static_cast<std::size_t>(rec.bin_index)];
    if (s == "subband_energy" || s == "subband_std") {
        const auto& dec = ctx.decomposition(rec.wavelet_name, w);
        const auto& band = dec.detail_coeffs[static_cast<std::size_t>(rec.dwt_level - 1)];
        return s == "subband_energy" ? vec_energy(band) : vec_std(band);
    }

    // level-2 statistics over a carrier
    if (s == "skewness") return vec_skewness(carrier_vector(ctx, rec, w, scratch), degenerate);
    if (s == "excess_kurtosis")
        return vec_excess_kurtosis(carrier_vector(ctx, rec, w, scratch), degenerate);
    if (s == "iqr") {
        const auto& v = carrier_vector(ctx, rec, w, scratch);
        return vec_quantile(v, 0.75) - vec_quantile(v, 0.25);
    }
    if (s == "shannon_entropy")
        return vec_shannon_entropy(carrier_vector(ctx, rec, w, scratch), degenerate);
    if (s == "energy") return vec_energy(carrier_vector(ctx, rec, w, scratch));
    if (s == "crest_factor") return vec_crest_factor(carrier_vector(ctx, rec, w, scratch), degenerate);

    // level-2 spectral shape
    if (s == "spectral_centroid" || s == "spectral_spread" || s == "spectral_rolloff" ||
        s == "spectral_flatness" || s == "dominant_frequency") {
        const Spectrum& spec = ctx.spectrum(w);
        const auto& m = spec.magnitudes;
        double total = std::accumulate(m.begin(), m.end(), 0.0);
        if (s == "spectral_centroid" || s == "spectral_spread") {
            if (total <= 0.0) {
                if (degenerate) *degenerate = true;
                return 0.0;
            }
            double centroid = 0.0;
            for (std::size_t k = 0; k < m.size(); ++k)
                centroid += static_cast<double>(k) * spec.bin_hz * m[k];
            centroid /= total;
            if (s == "spectral_centroid") return centroid;
            double spread = 0.0;
            for (std::size_t k = 0; k < m.size(); ++k) {
                double d = static_cast<double>(k) * spec.bin_hz - centroid;
                spread += d * d * m[k];
            }
            return std::sqrt(spread / total);
        }
        if (s == "spectral_rolloff") {
            double e_total = vec_energy(m);
            if (e_total <= 0.0) {
                if (degenerate) *degenerate = true;
                return 0.0;
            }
            double acc = 0.0;
            for (std::size_t k = 0; k < m.size(); ++k) {
                acc += m[k] * m[k];
                if (acc >= 0.85 * e_total) return static_cast<double>(k) * spec.bin_hz;
            }
            return static_cast<double>(m.size() - 1) * spec.bin_hz;
        }
        if (s == "spectral_flatness") {
            double e_total = vec_energy(m);
            if (e_total <= 0.0) {
                if (degenerate) *degenerate = true;
                return 1.0;
            }
            double log_sum = 0.0;
            double lin_sum = 0.0;
            const double floor_p = 1e-300;
            for (double mk : m) {
                double p = std::max(mk * mk, floor_p);
                log_sum += std::log(p);
                lin_sum += p;
            }
            double n = static_cast<double>(m.size());
            return std::exp(log_sum / n) / (lin_sum / n);
        }
        // dominant_frequency
        std::size_t best = 0;
        for (std::size_t k = 1; k < m.size(); ++k)
            if (m[k] > m[best]) best = k;
        return static_cast<double>(best) * spec.bin_hz;
    }

    // level-2 peak-trough family (raw carrier)
    if (s == "peak_count" || s == "mean_peak_height" || s == "mean_trough_depth" ||
        s == "mean_peak_trough_amplitude" || s == "mean_inter_peak_distance") {
        PeakTrough pt = find_peaks(ctx.windows[w]);
        const auto& x = ctx.windows[w];
        if (s == "peak_count") return static_cast<double>(pt.peaks.size());
        if (s == "mean_peak_height") {
            if (pt.peaks.empty()) return 0.0;
            double sum = 0.0;
            for (auto i : pt.peaks) sum += x[i] - pt.mean;
            return sum / static_cast<double>(pt.peaks.size());
        }
        if (s == "mean_trough_depth") {
            if (pt.troughs.empty()) return 0.0;
            double sum = 0.0;
            for (auto i : pt.troughs) sum += pt.mean - x[i];
            return sum / static_cast<double>(pt.troughs.size());
        }
        if (s == "mean_peak_trough_amplitude") {
            // merge extrema by index; adjacent opposite-type pairs
            std::vector<std::pair<std::size_t, bool>> ext;  // (index, is_peak)
            for (auto i : pt.peaks) ext.emplace_back(i, true);
            for (auto i : pt.troughs) ext.emplace_back(i, false);
            std::sort(ext.begin(), ext.end());
            double sum = 0.0;
            std::size_t pairs = 0;
            for (std::size_t i = 1; i < ext.size(); ++i) {
                if (ext[i].second != ext[i - 1].second) {
                    sum += std::abs(x[ext[i].first] - x[ext[i - 1].first]);
                    ++pairs;
                }
            }
            return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
        }
        // mean_inter_peak_distance
        if (pt.peaks.size() < 2) return 0.0;
        double sum = 0.0;
        for (std::size_t i = 1; i < pt.peaks.size(); ++i)
            sum += static_cast<double>(pt.peaks[i] - pt.peaks[i - 1]);
        return sum / static_cast<double>(pt.peaks.size() - 1);
    }

    throw InternalError("unknown statistic: " + s);
}

double aggregate(const std::vector<double>& per_window, const std::string& how) {
    if (per_window.empty()) return 0.0;
    if (how == "mean" || how.empty()) return vec_mean(per_window);
    if (how == "min") return *std::min_element(per_window.begin(), per_window.end());
    if (how == "max") return *std::max_element(per_window.begin(), per_window.end());
    if (how == "std") return vec_std(per_window);
    throw InternalError("unknown aggregation: " + how);
}

// Full evaluation of one record on one instance. Shared by pool generation
// and lineage replay so both always agree bit for bit.
double compute_record_value(const ProvenanceRecord& rec, const MappingTable& table,
                            const InstanceContext& ctx, bool* degenerate, bool* nonfinite) {
    auto guard = [&](double v) {
        if (!std::isfinite(v)) {
            if (nonfinite) *nonfinite = true;
            return 0.0;
        }
        return v;
    };

    if (rec.level <= 2) {
        std::vector<double> vals(ctx.windows.size());
        for (std::size_t w = 0; w < ctx.windows.size(); ++w)
            vals[w] = eval_statistic_at_window(ctx, rec, w, degenerate);
        return guard(aggregate(vals, rec.aggregation));
    }

    if (rec.statistic == "window_derivative") {
        // mean absolute difference of the source level-2 statistic between
        // consecutive windows; the parent is the record itself one level down
        ProvenanceRecord parent = rec;
        parent.level = 2;
        parent.statistic = rec.source_statistic;
        parent.source_statistic.clear();
        parent.parent_keys.clear();
        parent.aggregation = "mean";
        if (ctx.windows.size() < 2) {
            if (degenerate) *degenerate = true;
            return 0.0;
        }
        double sum = 0.0;
        double prev = eval_statistic_at_window(ctx, parent, 0, degenerate);
        for (std::size_t w = 1; w < ctx.windows.size(); ++w) {
            double cur = eval_statistic_at_window(ctx, parent, w, degenerate);
            sum += std::abs(cur - prev);
            prev = cur;
        }
        return guard(sum / static_cast<double>(ctx.windows.size() - 1));
    }

    if (rec.statistic == "ratio") {
        if (rec.parent_keys.size() != 2) throw InternalError("ratio needs exactly 2 parents");
        auto ida = table.id_of_key(rec.parent_keys[0]);
        auto idb = table.id_of_key(rec.parent_keys[1]);
        if (!ida || !idb) throw InternalError("ratio parent key not in table");
        double a = compute_record_value(table.by_id(*ida), table, ctx, degenerate, nonfinite);
        double b = compute_record_value(table.by_id(*idb), table, ctx, degenerate, nonfinite);
        if (std::abs(b) < kRatioEpsilon) {
            if (degenerate) *degenerate = true;
            return 0.0;
        }
        return guard(a / b);
    }

    throw InternalError("unknown level-3 statistic: " + rec.statistic);
}

}  // namespace

std::string domain_name(FeatureDomain d) {
    switch (d) {
        case FeatureDomain::Time: return "time";
        case FeatureDomain::Frequency: return "frequency";
        case FeatureDomain::Wavelet: return "wavelet";
    }
    return "?";
}

std::string transform_name(FeatureTransform t) {
    switch (t) {
        case FeatureTransform::None: return "none";
        case FeatureTransform::Stft: return "stft";
        case FeatureTransform::Dwt: return "dwt";
    }
    return "?";
}

std::string ProvenanceRecord::canonical_key() const {
    std::ostringstream os;
    os.precision(12);
    os << "L" << level << "|" << domain_name(domain) << "|" << transform_name(transform) << "|stat="
       << statistic;
    if (transform == FeatureTransform::Stft) os << "|nfft=" << n_fft;
    if (transform == FeatureTransform::Dwt) os << "|wav=" << wavelet_key << "|dlvl=" << dwt_level;
    if (!carrier.empty()) os << "|carrier=" << carrier;
    if (bin_index >= 0) os << "|bin=" << bin_index;
    os << "|ws=" << window_size_s << "|ov=" << overlap_fraction;
    os << "|w=" << (window_index == kWindowAll ? std::string("ALL") : std::to_string(window_index));
    if (!aggregation.empty()) os << "|agg=" << aggregation;
    for (const auto& p : parent_keys) os << "|parent={" << p << "}";
    return os.str();
}

const std::map<std::string, StatisticInfo>& statistic_registry() {
    static const std::map<std::string, StatisticInfo> registry = {
        {"mean", {"Arithmetic mean of the signal", "signal units; 0 for zero-mean signals"}},
        {"std", {"Standard deviation of the signal", "[0, inf)"}},
        {"rms", {"Root mean square of the signal", "[0, inf)"}},
        {"min", {"Minimum sample value", "signal units"}},
        {"max", {"Maximum sample value", "signal units"}},
        {"median", {"Median sample value", "signal units"}},
        {"zero_cross_count", {"Zero crossing count", "[0, window length)"}},
        {"stft_bin", {"STFT magnitude at a single frequency bin", "[0, inf)"}},
        {"subband_energy", {"Energy of DWT coefficients in one sub-band", "[0, inf)"}},
        {"subband_std", {"Standard deviation of DWT coefficients in one sub-band", "[0, inf)"}},
        {"skewness", {"Skewness", "(-inf, inf); 0 for symmetric data"}},
        {"excess_kurtosis", {"Excess kurtosis", "(-inf, inf); 0 for Gaussian data"}},
        {"iqr", {"Interquartile range", "[0, inf)"}},
        {"shannon_entropy", {"Shannon entropy of normalized squared values", "[0, ln(n)]"}},
        {"energy", {"Sum of squared values", "[0, inf)"}},
        {"crest_factor", {"Peak magnitude over RMS", "[1, sqrt(n)]"}},
        {"spectral_centroid", {"Magnitude-weighted mean frequency", "[0, Nyquist] Hz"}},
        {"spectral_spread", {"Magnitude-weighted frequency standard deviation", "[0, Nyquist] Hz"}},
        {"spectral_rolloff", {"Frequency below which 85% of spectral energy lies", "[0, Nyquist] Hz"}},
        {"spectral_flatness", {"Geometric over arithmetic mean of the power spectrum", "[0, 1]"}},
        {"dominant_frequency", {"Frequency of the largest magnitude bin", "[0, Nyquist] Hz"}},
        {"peak_count", {"Count of strict local maxima above mean + 0.5 std", "[0, n/2]"}},
        {"mean_peak_height", {"Mean peak elevation above the window mean", "[0, inf)"}},
        {"mean_trough_depth", {"Mean trough depression below the window mean", "[0, inf)"}},
        {"mean_peak_trough_amplitude", {"Mean amplitude between adjacent peak/trough pairs", "[0, inf)"}},
        {"mean_inter_peak_distance", {"Mean distance between consecutive peaks in samples", "[0, n)"}},
        {"window_derivative",
         {"Mean absolute difference of a level-2 statistic between consecutive windows", "[0, inf)"}},
        {"ratio", {"Ratio of two level-2 feature values", "(-inf, inf); 0 when denominator vanishes"}},
    };
    return registry;
}

const ProvenanceRecord& MappingTable::by_id(std::int64_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= records.size())
        throw DataError("unknown feature id: " + std::to_string(id));
    return records[static_cast<std::size_t>(id)];
}

std::optional<std::int64_t> MappingTable::id_of_key(const std::string& canonical_key) const {
    for (const auto& r : records)
        if (r.canonical_key() == canonical_key) return r.feature_id;
    return std::nullopt;
}

std::size_t FeatureConfig::resolve_window_length(const SignalDataset& ds) const {
    if (window_length_override > 0) return window_length_override;
    if (window.window_size_s > 0.0) {
        std::size_t len = window.window_length_samples(ds.sampling_rate_hz);
        if (len < 4) throw ConfigError("window shorter than 4 samples");
        return len;
    }
    // full-signal windows: the shortest instance defines the shared length
    std::size_t min_len = ds.instances.front().samples.size();
    for (const auto& inst : ds.instances) min_len = std::min(min_len, inst.samples.size());
    return min_len;
}

std::size_t FeatureConfig::resolve_n_fft(std::size_t window_len) const {
    if (n_fft > 0) {
        if (n_fft < window_len) throw ConfigError("n_fft smaller than window length");
        return n_fft;
    }
    return next_pow2(window_len);
}

std::size_t FeaturePool::row_of(std::int64_t instance_id) const {
    auto it = std::lower_bound(row_instance_ids.begin(), row_instance_ids.end(), instance_id);
    if (it == row_instance_ids.end() || *it != instance_id)
        throw InternalError("instance not in pool: " + std::to_string(instance_id));
    return static_cast<std::size_t>(it - row_instance_ids.begin());
}

namespace {

struct InventoryParams {
    std::size_t window_len = 0;
    std::size_t n_fft = 0;
    std::size_t n_bins = 0;
    std::size_t dwt_levels = 0;
    std::size_t window_count_min = 0;
    double rate_hz = 0.0;
    std::vector<std::pair<std::string, std::string>> wavelets;  // (key, concrete name)
};

ProvenanceRecord base_record(const FeatureConfig& config, int level) {
    ProvenanceRecord r;
    r.level = level;
    r.window_size_s = config.window.window_size_s;
    r.overlap_fraction = config.window.overlap_fraction;
    r.aggregation = "mean";
    return r;
}

void push_agg_variants(std::vector<ProvenanceRecord>& out, ProvenanceRecord rec,
                       const FeatureConfig& config) {
    out.push_back(rec);
    if (config.multi_agg) {
        for (const char* how : {"min", "max", "std"}) {
            rec.aggregation = how;
            out.push_back(rec);
        }
    }
}

std::vector<ProvenanceRecord> level1_inventory(const FeatureConfig& config, const InventoryParams& p) {
    std::vector<ProvenanceRecord> out;
    for (const char* stat :
         {"mean", "std", "rms", "min", "max", "median", "zero_cross_count"}) {
        ProvenanceRecord r = base_record(config, 1);
        r.domain = FeatureDomain::Time;
        r.transform = FeatureTransform::None;
        r.statistic = stat;
        push_agg_variants(out, r, config);
    }
    for (std::size_t bin = 0; bin < p.n_bins; bin += std::max<std::size_t>(1, config.bin_stride)) {
        ProvenanceRecord r = base_record(config, 1);
        r.domain = FeatureDomain::Frequency;
        r.transform = FeatureTransform::Stft;
        r.statistic = "stft_bin";
        r.n_fft = p.n_fft;
        r.bin_index = static_cast<int>(bin);
        r.frequency_hz = static_cast<double>(bin) * p.rate_hz / static_cast<double>(p.n_fft);
        push_agg_variants(out, r, config);
    }
    for (const auto& [key, name] : p.wavelets) {
        for (std::size_t lvl = 1; lvl <= p.dwt_levels; ++lvl) {
            for (const char* stat : {"subband_energy", "subband_std"}) {
                ProvenanceRecord r = base_record(config, 1);
                r.domain = FeatureDomain::Wavelet;
                r.transform = FeatureTransform::Dwt;
                r.statistic = stat;
                r.wavelet_key = key;
                r.wavelet_name = name;
                r.dwt_level = static_cast<int>(lvl);
                r.pseudo_freq_hz = pseudo_frequency(name, lvl, p.rate_hz);
                push_agg_variants(out, r, config);
            }
        }
    }
    return out;
}

std::vector<ProvenanceRecord> level2_inventory(const FeatureConfig& config, const InventoryParams& p) {
    std::vector<ProvenanceRecord> out;
    const char* carrier_stats[] = {"skewness", "excess_kurtosis", "iqr",
                                   "shannon_entropy", "energy", "crest_factor"};
    for (const char* stat : carrier_stats) {
        ProvenanceRecord r = base_record(config, 2);
        r.domain = FeatureDomain::Time;
        r.transform = FeatureTransform::None;
        r.carrier = "raw";
        r.statistic = stat;
        push_agg_variants(out, r, config);
    }
    for (const char* stat : carrier_stats) {
        ProvenanceRecord r = base_record(config, 2);
        r.domain = FeatureDomain::Frequency;
        r.transform = FeatureTransform::Stft;
        r.carrier = "stft";
        r.statistic = stat;
        r.n_fft = p.n_fft;
        push_agg_variants(out, r, config);
    }
    for (const auto& [key, name] : p.wavelets) {
        for (std::size_t lvl = 1; lvl <= p.dwt_levels; ++lvl) {
            for (const char* stat : carrier_stats) {
                ProvenanceRecord r = base_record(config, 2);
                r.domain = FeatureDomain::Wavelet;
                r.transform = FeatureTransform::Dwt;
                r.carrier = "dwt";
                r.statistic = stat;
                r.wavelet_key = key;
                r.wavelet_name = name;
                r.dwt_level = static_cast<int>(lvl);
                r.pseudo_freq_hz = pseudo_frequency(name, lvl, p.rate_hz);
                push_agg_variants(out, r, config);
            }
        }
    }
    for (const char* stat : {"spectral_centroid", "spectral_spread", "spectral_rolloff",
                             "spectral_flatness", "dominant_frequency"}) {
        ProvenanceRecord r = base_record(config, 2);
        r.domain = FeatureDomain::Frequency;
        r.transform = FeatureTransform::Stft;
        r.carrier = "stft";
        r.statistic = stat;
        r.n_fft = p.n_fft;
        push_agg_variants(out, r, config);
    }
    for (const char* stat : {"peak_count", "mean_peak_height", "mean_trough_depth",
                             "mean_peak_trough_amplitude", "mean_inter_peak_distance"}) {
        ProvenanceRecord r = base_record(config, 2);
        r.domain = FeatureDomain::Time;
        r.transform = FeatureTransform::None;
        r.carrier = "raw";
        r.statistic = stat;
        push_agg_variants(out, r, config);
    }
    return out;
}

}  // namespace

FeaturePool build_feature_pool(const SignalDataset& dataset, const FoldPlan& fold_plan, int fold,
                               int level, const FeatureConfig& config, unsigned threads) {
    if (level < 1 || level > 3) throw ConfigError("feature level must be 1..3");

    FeaturePool pool;
    pool.level = level;

    const std::size_t window_len = config.resolve_window_length(dataset);
    InventoryParams params;
    params.window_len = window_len;
    params.n_fft = config.resolve_n_fft(window_len);
    params.n_bins = params.n_fft / 2 + 1;
    params.dwt_levels = std::min(config.dwt_levels, max_dwt_levels(window_len));
    params.rate_hz = dataset.sampling_rate_hz;

    // effective window-size echo for provenance keys
    FeatureConfig cfg = config;
    if (cfg.window.window_size_s <= 0.0)
        cfg.window.window_size_s = static_cast<double>(window_len) / dataset.sampling_rate_hz;

    std::size_t min_windows = std::numeric_limits<std::size_t>::max();
    for (const auto& inst : dataset.instances) {
        std::size_t hop = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(window_len) *
                                                     (1.0 - cfg.window.overlap_fraction))));
        if (inst.samples.size() < window_len)
            throw DataError("instance " + std::to_string(inst.instance_id) + " shorter than window");
        min_windows = std::min(min_windows, (inst.samples.size() - window_len) / hop + 1);
    }
    params.window_count_min = min_windows;

    // mother wavelet: chosen on this fold's Train segments only
    if (cfg.wavelet_sweep) {
        for (const auto& name : wavelet_library()) params.wavelets.emplace_back(name, name);
        pool.selected_wavelet = "sweep";
    } else if (!cfg.wavelet_override.empty()) {
        if (!is_known_wavelet(cfg.wavelet_override))
            throw ConfigError("unknown wavelet: " + cfg.wavelet_override);
        params.wavelets.emplace_back("auto", cfg.wavelet_override);
        pool.selected_wavelet = cfg.wavelet_override;
    } else {
        std::map<int, std::vector<std::vector<double>>> per_class;
        for (auto id : fold_plan.ids_with_role(fold, Role::Train)) {
            const SignalInstance* inst = nullptr;
            for (const auto& cand : dataset.instances)
                if (cand.instance_id == id) inst = &cand;
            if (!inst) throw InternalError("fold references unknown instance");
            InstanceContext ctx = make_context(*inst, dataset.sampling_rate_hz, window_len, cfg);
            for (auto& w : ctx.windows) per_class[inst->label].push_back(std::move(w));
        }
        MotherWaveletChoice choice = select_mother_wavelet(per_class, wavelet_library());
        params.wavelets.emplace_back("auto", choice.wavelet_name);
        pool.selected_wavelet = choice.wavelet_name;
    }

    // inventory for levels <= requested level
    std::vector<ProvenanceRecord> inventory = level1_inventory(cfg, params);
    std::vector<ProvenanceRecord> level2;
    if (level >= 2) {
        level2 = level2_inventory(cfg, params);
        inventory.insert(inventory.end(), level2.begin(), level2.end());
    }

    // rows sorted by instance id
    std::vector<const SignalInstance*> ordered;
    for (const auto& inst : dataset.instances) ordered.push_back(&inst);
    std::sort(ordered.begin(), ordered.end(),
              [](const SignalInstance* a, const SignalInstance* b) { return a->instance_id < b->instance_id; });
    pool.row_instance_ids.resize(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) pool.row_instance_ids[i] = ordered[i]->instance_id;

    // level-3 inventory needs train-side level-2 values for the ratio
    // prefilter, so levels 1-2 are materialized first
    auto sort_and_index = [](std::vector<ProvenanceRecord>& recs) {
        std::sort(recs.begin(), recs.end(), [](const ProvenanceRecord& a, const ProvenanceRecord& b) {
            return a.canonical_key() < b.canonical_key();
        });
        for (std::size_t i = 0; i < recs.size(); ++i) recs[i].feature_id = static_cast<std::int64_t>(i);
    };
    sort_and_index(inventory);

    MappingTable staging;
    staging.records = inventory;

    Matrix base_values(ordered.size(), inventory.size());
    std::vector<std::atomic<char>> degenerate_flags(inventory.size());
    std::vector<std::atomic<char>> nonfinite_flags(inventory.size());
    for (auto& f : degenerate_flags) f.store(0);
    for (auto& f : nonfinite_flags) f.store(0);

    parallel_for(ordered.size(), threads, [&](std::size_t row) {
        InstanceContext ctx = make_context(*ordered[row], dataset.sampling_rate_hz, window_len, cfg);
        for (std::size_t c = 0; c < staging.records.size(); ++c) {
            bool degen = false, nonfin = false;
            base_values.at(row, c) =
                compute_record_value(staging.records[c], staging, ctx, &degen, &nonfin);
            if (degen) degenerate_flags[c].store(1);
            if (nonfin) nonfinite_flags[c].store(1);
        }
    });

    std::vector<ProvenanceRecord> final_records = staging.records;
    Matrix final_values = base_values;

    if (level >= 3) {
        std::vector<ProvenanceRecord> l3;

        // derivatives across windows exist only when every instance has >= 2
        if (params.window_count_min >= 2) {
            for (const auto& rec : staging.records) {
                if (rec.level != 2 || rec.aggregation != "mean") continue;
                ProvenanceRecord d = rec;
                d.level = 3;
                d.parent_keys = {rec.canonical_key()};
                d.statistic = "window_derivative";
                d.source_statistic = rec.statistic;
                d.aggregation.clear();
                l3.push_back(std::move(d));
            }
        }

        // ratio prefilter: top-R level-2 mean-aggregated features by
        // univariate MI with the label on this fold's Train rows
        std::vector<std::size_t> level2_cols;
        for (std::size_t c = 0; c < staging.records.size(); ++c)
            if (staging.records[c].level == 2 && staging.records[c].aggregation == "mean")
                level2_cols.push_back(c);

        auto train_ids = fold_plan.ids_with_role(fold, Role::Train);
        std::vector<std::size_t> train_rows;
        std::vector<int> train_labels;
        for (auto id : train_ids) {
            std::size_t row = pool.row_of(id);
            train_rows.push_back(row);
            train_labels.push_back(ordered[row]->label);
        }
        std::size_t bins = auto_bin_count(train_rows.size());
        std::vector<std::pair<double, std::size_t>> relevance;
        for (std::size_t c : level2_cols) {
            std::vector<double> train_vals;
            train_vals.reserve(train_rows.size());
            for (auto r : train_rows) train_vals.push_back(base_values.at(r, c));
            Discretizer disc = Discretizer::fit(train_vals, bins);
            double mi = mutual_information(disc.apply(train_vals), train_labels);
            relevance.emplace_back(-mi, c);  // sort ascending on -mi, then column
        }
        std::sort(relevance.begin(), relevance.end());
        std::size_t top_r = std::min(cfg.ratio_top_r, relevance.size());
        std::vector<std::size_t> top_cols;
        for (std::size_t i = 0; i < top_r; ++i) top_cols.push_back(relevance[i].second);
        std::sort(top_cols.begin(), top_cols.end());

        for (std::size_t a : top_cols) {
            for (std::size_t b : top_cols) {
                if (a == b) continue;
                ProvenanceRecord r = base_record(cfg, 3);
                r.statistic = "ratio";
                r.domain = staging.records[a].domain;
                r.transform = staging.records[a].transform;
                r.parent_keys = {staging.records[a].canonical_key(),
                                 staging.records[b].canonical_key()};
                r.aggregation.clear();
                l3.push_back(std::move(r));
            }
        }

        // evaluate level-3 columns straight from the level-1/2 matrix
        std::sort(l3.begin(), l3.end(), [](const ProvenanceRecord& a, const ProvenanceRecord& b) {
            return a.canonical_key() < b.canonical_key();
        });

        std::map<std::string, std::size_t> col_of_key;
        for (std::size_t c = 0; c < staging.records.size(); ++c)
            col_of_key[staging.records[c].canonical_key()] = c;

        Matrix l3_values(ordered.size(), l3.size());
        std::vector<std::atomic<char>> l3_degen(l3.size());
        std::vector<std::atomic<char>> l3_nonfin(l3.size());
        for (auto& f : l3_degen) f.store(0);
        for (auto& f : l3_nonfin) f.store(0);

        // ratios come from materialized parents; derivatives need per-window
        // re-evaluation
        std::vector<std::size_t> derivative_cols;
        for (std::size_t c = 0; c < l3.size(); ++c)
            if (l3[c].statistic == "window_derivative") derivative_cols.push_back(c);

        parallel_for(ordered.size(), threads, [&](std::size_t row) {
            std::optional<InstanceContext> ctx;
            for (std::size_t c = 0; c < l3.size(); ++c) {
                const auto& rec = l3[c];
                if (rec.statistic == "ratio") {
                    double a = base_values.at(row, col_of_key.at(rec.parent_keys[0]));
                    double b = base_values.at(row, col_of_key.at(rec.parent_keys[1]));
                    double v;
                    if (std::abs(b) < kRatioEpsilon) {
                        l3_degen[c].store(1);
                        v = 0.0;
                    } else {
                        v = a / b;
                        if (!std::isfinite(v)) {
                            l3_nonfin[c].store(1);
                            v = 0.0;
                        }
                    }
                    l3_values.at(row, c) = v;
                } else {
                    if (!ctx)
                        ctx = make_context(*ordered[row], dataset.sampling_rate_hz, window_len, cfg);
                    bool degen = false, nonfin = false;
                    l3_values.at(row, c) =
                        compute_record_value(rec, staging, *ctx, &degen, &nonfin);
                    if (degen) l3_degen[c].store(1);
                    if (nonfin) l3_nonfin[c].store(1);
                }
            }
        });

        // merge and re-sort the full inventory by canonical key
        std::vector<std::pair<std::string, std::pair<int, std::size_t>>> merged;  // key -> (block, col)
        for (std::size_t c = 0; c < final_records.size(); ++c)
            merged.push_back({final_records[c].canonical_key(), {0, c}});
        for (std::size_t c = 0; c < l3.size(); ++c) merged.push_back({l3[c].canonical_key(), {1, c}});
        std::sort(merged.begin(), merged.end());

        std::vector<ProvenanceRecord> all_records;
        Matrix all_values(ordered.size(), merged.size());
        for (std::size_t m = 0; m < merged.size(); ++m) {
            const auto& [key, src] = merged[m];
            const auto& rec = src.first == 0 ? final_records[src.second] : l3[src.second];
            const Matrix& mat = src.first == 0 ? final_values : l3_values;
            all_records.push_back(rec);
            all_records.back().feature_id = static_cast<std::int64_t>(m);
            if (src.first == 1) {
                if (l3_degen[src.second].load()) all_records.back().flags.push_back("degenerate");
                if (l3_nonfin[src.second].load())
                    all_records.back().flags.push_back("nonfinite_replaced");
            }
            for (std::size_t r = 0; r < ordered.size(); ++r) all_values.at(r, m) = mat.at(r, src.second);
        }
        final_records = std::move(all_records);
        final_values = std::move(all_values);
    }

    // degeneracy flags for level-1/2 columns (ids unchanged by the merge for
    // level <= 2 runs; after a level-3 merge the flags were already copied)
    if (level < 3) {
        for (std::size_t c = 0; c < final_records.size(); ++c) {
            if (degenerate_flags[c].load()) final_records[c].flags.push_back("degenerate");
            if (nonfinite_flags[c].load()) final_records[c].flags.push_back("nonfinite_replaced");
        }
    } else {
        // map flags of the level-1/2 block through the merge by key
        std::map<std::string, std::pair<bool, bool>> flag_of_key;
        for (std::size_t c = 0; c < staging.records.size(); ++c)
            flag_of_key[staging.records[c].canonical_key()] = {degenerate_flags[c].load() != 0,
                                                               nonfinite_flags[c].load() != 0};
        for (auto& rec : final_records) {
            auto it = flag_of_key.find(rec.canonical_key());
            if (it == flag_of_key.end()) continue;
            if (it->second.first) rec.flags.push_back("degenerate");
            if (it->second.second) rec.flags.push_back("nonfinite_replaced");
        }
    }

    // constant-across-Train columns are flagged and excluded from selection
    auto train_ids = fold_plan.ids_with_role(fold, Role::Train);
    for (std::size_t c = 0; c < final_records.size(); ++c) {
        bool constant = true;
        double first = 0.0;
        bool first_set = false;
        for (auto id : train_ids) {
            double v = final_values.at(pool.row_of(id), c);
            if (!first_set) {
                first = v;
                first_set = true;
            } else if (v != first) {
                constant = false;
                break;
            }
        }
        if (constant && first_set) {
            final_records[c].flags.push_back("constant_train");
            pool.constant_train_ids.push_back(final_records[c].feature_id);
        }
    }

    pool.values = std::move(final_values);
    pool.table.records = std::move(final_records);
    return pool;
}

double replay_feature(const ProvenanceRecord& record, const MappingTable& table,
                      const SignalInstance& instance, double rate_hz, const FeatureConfig& config,
                      const std::string& selected_wavelet) {
    FeatureConfig cfg = config;
    if (cfg.window.window_size_s <= 0.0 && record.window_size_s > 0.0)
        cfg.window.window_size_s = record.window_size_s;
    std::size_t window_len = cfg.window_length_override > 0
                                 ? cfg.window_length_override
                                 : cfg.window.window_length_samples(rate_hz);
    (void)selected_wavelet;  // concrete name already carried by the record
    InstanceContext ctx = make_context(instance, rate_hz, window_len, cfg);
    return compute_record_value(record, table, ctx, nullptr, nullptr);
}

}  // namespace sigfeat
