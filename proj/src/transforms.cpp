#include "sigfeat/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "sigfeat/wavelet_filters.hpp"

namespace sigfeat {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEntropyFloor = 1e-12;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey; length must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

// Bluestein chirp-z for arbitrary lengths. The chirp exponent is reduced
// mod 2n to keep the angle argument small.
void fft_bluestein(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t sq = (i * i) % (2 * n);
        double ang = kPi * static_cast<double>(sq) / static_cast<double>(n) * (inverse ? 1.0 : -1.0);
        chirp[i] = std::complex<double>(std::cos(ang), std::sin(ang));
    }
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<std::complex<double>> f(m, {0.0, 0.0});
    std::vector<std::complex<double>> g(m, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) f[i] = a[i] * std::conj(chirp[i]);
    g[0] = chirp[0];
    for (std::size_t i = 1; i < n; ++i) g[i] = g[m - i] = chirp[i];
    fft_pow2(f, false);
    fft_pow2(g, false);
    for (std::size_t i = 0; i < m; ++i) f[i] *= g[i];
    fft_pow2(f, true);
    for (std::size_t i = 0; i < n; ++i) a[i] = f[i] * std::conj(chirp[i]);
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

const WaveletFilter& find_filter(const std::string& name) {
    for (const auto& f : wavelet_filters())
        if (name == f.name) return f;
    throw ConfigError("unknown wavelet: " + name);
}

struct FilterPair {
    std::vector<double> dec_lo;
    std::vector<double> dec_hi;
};

FilterPair analysis_filters(const std::string& name) {
    const auto& h = find_filter(name).rec_lo;
    const std::size_t len = h.size();
    FilterPair p;
    p.dec_lo.resize(len);
    p.dec_hi.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        p.dec_lo[i] = h[len - 1 - i];
        p.dec_hi[i] = (i % 2 == 0) ? h[i] : -h[i];
    }
    return p;
}

// symmetric (half-point) extension lookup
double sym_ext(const std::vector<double>& x, std::ptrdiff_t idx) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    while (idx < 0 || idx >= n) {
        if (idx < 0) idx = -idx - 1;
        if (idx >= n) idx = 2 * n - idx - 1;
    }
    return x[static_cast<std::size_t>(idx)];
}

// Single analysis step: correlation with the filter over the symmetric
// extension, downsampled by 2. floor((n+L)/2) coefficients per band keep
// the middle portion exactly invertible.
void dwt_step(const std::vector<double>& x, const FilterPair& filt, std::vector<double>& approx,
              std::vector<double>& detail) {
    const std::size_t n = x.size();
    const std::size_t len = filt.dec_lo.size();
    const std::size_t n_out = (n + len) / 2;
    approx.assign(n_out, 0.0);
    detail.assign(n_out, 0.0);
    for (std::size_t k = 0; k < n_out; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t m = 0; m < len; ++m) {
            double v = sym_ext(x, static_cast<std::ptrdiff_t>(2 * k + m) -
                                      static_cast<std::ptrdiff_t>(len - 1));
            a += filt.dec_lo[m] * v;
            d += filt.dec_hi[m] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

// Adjoint of dwt_step: exact inverse for orthonormal filters.
std::vector<double> idwt_step(const std::vector<double>& approx, const std::vector<double>& detail,
                              const FilterPair& filt, std::size_t out_len) {
    const std::size_t len = filt.dec_lo.size();
    const std::size_t n_out = approx.size();
    std::vector<double> full(out_len + 2 * (len - 1), 0.0);
    for (std::size_t k = 0; k < n_out; ++k) {
        for (std::size_t m = 0; m < len; ++m) {
            std::size_t i = 2 * k + m;
            if (i < full.size()) {
                full[i] += approx[k] * filt.dec_lo[m];
                full[i] += detail[k] * filt.dec_hi[m];
            }
        }
    }
    return {full.begin() + static_cast<std::ptrdiff_t>(len - 1),
            full.begin() + static_cast<std::ptrdiff_t>(len - 1 + out_len)};
}

// Zero-boundary synthesis used only to discretize the wavelet function.
std::vector<double> upsample_synth(const std::vector<double>& v, const std::vector<double>& f) {
    std::vector<double> out(2 * v.size() + f.size() - 2, 0.0);
    for (std::size_t k = 0; k < v.size(); ++k)
        for (std::size_t m = 0; m < f.size(); ++m) out[2 * k + m] += v[k] * f[m];
    return out;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    if (a.empty()) return;
    if (a.size() == 1) return;
    if (is_pow2(a.size()))
        fft_pow2(a, inverse);
    else
        fft_bluestein(a, inverse);
}

Spectrum stft_magnitude(const std::vector<double>& segment, double rate_hz, std::size_t n_fft,
                        FftWindow window) {
    if (segment.empty()) throw DataError("stft: empty segment");
    if (n_fft < segment.size()) throw ConfigError("stft: n_fft smaller than segment");
    std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
    const std::size_t n = segment.size();
    for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        if (window == FftWindow::Hann && n > 1)
            w = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1)));
        buf[i] = {segment[i] * w, 0.0};
    }
    fft(buf, false);
    Spectrum spec;
    spec.n_fft = n_fft;
    spec.bin_hz = rate_hz / static_cast<double>(n_fft);
    spec.magnitudes.resize(n_fft / 2 + 1);
    for (std::size_t k = 0; k < spec.magnitudes.size(); ++k) spec.magnitudes[k] = std::abs(buf[k]);
    return spec;
}

const std::vector<std::string>& wavelet_library() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& f : wavelet_filters()) v.push_back(f.name);
        return v;
    }();
    return names;
}

bool is_known_wavelet(const std::string& name) {
    for (const auto& f : wavelet_filters())
        if (name == f.name) return true;
    return false;
}

std::size_t max_dwt_levels(std::size_t signal_length) {
    if (signal_length < 4) return 0;
    std::size_t levels = 0;
    while ((std::size_t{2} << (levels + 1)) <= signal_length) ++levels;
    return levels;
}

WaveletDecomposition dwt(const std::vector<double>& segment, const std::string& wavelet_name,
                         std::size_t levels, double rate_hz) {
    if (segment.size() < 4) throw DataError("dwt: segment too short");
    if (levels == 0) throw ConfigError("dwt: levels must be >= 1");
    if (levels > max_dwt_levels(segment.size()))
        throw ConfigError("dwt: too many levels (" + std::to_string(levels) + ") for length " +
                          std::to_string(segment.size()));
    FilterPair filt = analysis_filters(wavelet_name);

    WaveletDecomposition dec;
    dec.wavelet_name = wavelet_name;
    dec.levels = levels;
    std::vector<double> current = segment;
    for (std::size_t lvl = 1; lvl <= levels; ++lvl) {
        dec.input_lengths.push_back(current.size());
        std::vector<double> approx, detail;
        dwt_step(current, filt, approx, detail);
        dec.detail_coeffs.push_back(std::move(detail));
        current = std::move(approx);
        if (rate_hz > 0.0) dec.pseudo_freq_hz.push_back(pseudo_frequency(wavelet_name, lvl, rate_hz));
    }
    dec.approx_coeffs = std::move(current);
    return dec;
}

std::vector<double> idwt(const WaveletDecomposition& dec) {
    FilterPair filt = analysis_filters(dec.wavelet_name);
    std::vector<double> current = dec.approx_coeffs;
    for (std::size_t lvl = dec.levels; lvl >= 1; --lvl) {
        current = idwt_step(current, dec.detail_coeffs[lvl - 1], filt, dec.input_lengths[lvl - 1]);
    }
    return current;
}

double wavelet_center_frequency(const std::string& wavelet_name) {
    static std::map<std::string, double> cache;
    static std::mutex cache_mutex;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find(wavelet_name);
        if (it != cache.end()) return it->second;
    }
    FilterPair filt = analysis_filters(wavelet_name);
    // discretize psi: detail impulse pushed through 8 synthesis steps
    // (2^8 samples per unit of support), endpoint appended
    constexpr int kCascadeSteps = 8;
    std::vector<double> psi = {1.0};
    psi = upsample_synth(psi, filt.dec_hi);
    for (int j = 1; j < kCascadeSteps; ++j) psi = upsample_synth(psi, filt.dec_lo);
    psi.push_back(0.0);

    std::vector<std::complex<double>> buf(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) buf[i] = {psi[i], 0.0};
    fft(buf, false);
    std::size_t best_k = 1;
    double best_mag = 0.0;
    for (std::size_t k = 1; k <= psi.size() / 2; ++k) {
        double m = std::abs(buf[k]);
        if (m > best_mag) {
            best_mag = m;
            best_k = k;
        }
    }
    double samples_per_unit = static_cast<double>(std::size_t{1} << kCascadeSteps);
    double fc = static_cast<double>(best_k) * samples_per_unit / static_cast<double>(psi.size());
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache[wavelet_name] = fc;
    return fc;
}

double pseudo_frequency(const std::string& wavelet_name, std::size_t level, double rate_hz) {
    if (level == 0) throw ConfigError("pseudo_frequency: level must be >= 1");
    double fc = wavelet_center_frequency(wavelet_name);
    return fc * rate_hz / std::pow(2.0, static_cast<double>(level));
}

std::vector<WaveletScore> score_wavelets(const std::vector<std::vector<double>>& train_segments,
                                         const std::vector<std::string>& library) {
    if (library.empty()) throw ConfigError("score_wavelets: empty wavelet library");
    if (train_segments.empty()) throw DataError("score_wavelets: no training segments");

    std::vector<WaveletScore> scores;
    for (const auto& name : library) {
        WaveletScore ws;
        ws.wavelet_name = name;
        double ratio_sum = 0.0;
        double energy_sum = 0.0;
        double entropy_sum = 0.0;
        for (const auto& seg : train_segments) {
            std::size_t levels = max_dwt_levels(seg.size());
            if (levels == 0) {
                ++ws.segments_skipped;
                continue;
            }
            WaveletDecomposition dec = dwt(seg, name, levels);
            double energy = 0.0;
            for (const auto& band : dec.detail_coeffs)
                for (double c : band) energy += c * c;
            for (double c : dec.approx_coeffs) energy += c * c;
            if (energy <= 0.0) {
                ++ws.segments_skipped;
                continue;
            }
            double entropy = 0.0;
            auto accumulate_entropy = [&](const std::vector<double>& band) {
                for (double c : band) {
                    double p = c * c / energy;
                    if (p > 0.0) entropy -= p * std::log(p);
                }
            };
            for (const auto& band : dec.detail_coeffs) accumulate_entropy(band);
            accumulate_entropy(dec.approx_coeffs);
            entropy = std::max(entropy, kEntropyFloor);
            ratio_sum += energy / entropy;
            energy_sum += energy;
            entropy_sum += entropy;
            ++ws.segments_used;
        }
        if (ws.segments_used > 0) {
            double n = static_cast<double>(ws.segments_used);
            ws.energy = energy_sum / n;
            ws.entropy = entropy_sum / n;
            ws.ratio = ratio_sum / n;
        }
        scores.push_back(std::move(ws));
    }
    bool any_used = std::any_of(scores.begin(), scores.end(),
                                [](const WaveletScore& s) { return s.segments_used > 0; });
    if (!any_used) throw DataError("score_wavelets: all segments had zero energy");
    std::stable_sort(scores.begin(), scores.end(),
                     [](const WaveletScore& a, const WaveletScore& b) { return a.ratio > b.ratio; });
    return scores;
}

MotherWaveletChoice select_mother_wavelet(
    const std::map<int, std::vector<std::vector<double>>>& per_class_segments,
    const std::vector<std::string>& library) {
    if (per_class_segments.size() < 2) throw DataError("select_mother_wavelet: need both classes");

    std::vector<std::vector<double>> pooled;
    for (const auto& [label, segs] : per_class_segments)
        pooled.insert(pooled.end(), segs.begin(), segs.end());

    MotherWaveletChoice choice;
    choice.overall_scores = score_wavelets(pooled, library);
    const auto& overall = choice.overall_scores;
    bool close_tie = overall.size() >= 2 && overall[0].ratio > 0.0 &&
                     (overall[0].ratio - overall[1].ratio) / overall[0].ratio < 0.05;
    if (!close_tie) {
        choice.wavelet_name = overall[0].wavelet_name;
        choice.criterion = WaveletChoiceCriterion::EnergyEntropy;
        return choice;
    }

    // per-class mean scores -> wavelet with largest class separation
    std::map<std::string, std::vector<double>> by_name;
    for (const auto& [label, segs] : per_class_segments) {
        auto class_scores = score_wavelets(segs, library);
        for (const auto& s : class_scores) by_name[s.wavelet_name].push_back(s.ratio);
    }
    std::string best_name;
    double best_dist = -1.0;
    for (const auto& name : library) {
        const auto& vals = by_name[name];
        if (vals.size() < 2) continue;
        double dist = std::abs(vals[0] - vals[1]);
        if (dist > best_dist) {
            best_dist = dist;
            best_name = name;
        }
    }
    choice.wavelet_name = best_name.empty() ? overall[0].wavelet_name : best_name;
    choice.criterion = WaveletChoiceCriterion::ClassDistance;
    return choice;
}

}  // namespace sigfeat
