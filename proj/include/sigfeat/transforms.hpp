#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sigfeat/common.hpp"

namespace sigfeat {

struct Spectrum {
    std::vector<double> magnitudes;  // bins 0 .. floor(n_fft/2)
    double bin_hz = 0.0;
    std::size_t n_fft = 0;
};

enum class FftWindow { Hann, Rect };

// In-place complex DFT, any length (radix-2 when possible, Bluestein otherwise).
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

// Hann-windowed (by default) magnitude spectrum of a real segment, zero
// padded to n_fft. Only non-negative frequency bins are kept.
Spectrum stft_magnitude(const std::vector<double>& segment, double rate_hz, std::size_t n_fft,
                        FftWindow window = FftWindow::Hann);

std::size_t next_pow2(std::size_t n);

// ---- Discrete wavelet transform -------------------------------------------

struct WaveletDecomposition {
    std::string wavelet_name;
    std::size_t levels = 0;
    std::vector<std::vector<double>> detail_coeffs;  // index 0 = level 1
    std::vector<double> approx_coeffs;
    std::vector<double> pseudo_freq_hz;              // per detail level
    std::vector<std::size_t> input_lengths;          // per level, for inversion
};

struct WaveletScore {
    std::string wavelet_name;
    double energy = 0.0;
    double entropy = 0.0;
    double ratio = 0.0;
    std::size_t segments_used = 0;
    std::size_t segments_skipped = 0;  // zero-energy segments
};

const std::vector<std::string>& wavelet_library();
bool is_known_wavelet(const std::string& name);

std::size_t max_dwt_levels(std::size_t signal_length);

WaveletDecomposition dwt(const std::vector<double>& segment, const std::string& wavelet_name,
                         std::size_t levels, double rate_hz = 0.0);

// Inverse of dwt (exercised by the reconstruction tests).
std::vector<double> idwt(const WaveletDecomposition& dec);

// Representative frequency of a DWT level: f_center(wavelet) * rate / 2^level.
double pseudo_frequency(const std::string& wavelet_name, std::size_t level, double rate_hz);

// Dominant DFT bin of the cascaded wavelet function, in cycles per unit of
// the mother wavelet's support. Cached after first evaluation.
double wavelet_center_frequency(const std::string& wavelet_name);

// Mean energy-to-entropy ratio of full-depth decompositions, sorted
// descending by ratio.
std::vector<WaveletScore> score_wavelets(const std::vector<std::vector<double>>& train_segments,
                                         const std::vector<std::string>& library);

enum class WaveletChoiceCriterion { EnergyEntropy, ClassDistance };

struct MotherWaveletChoice {
    std::string wavelet_name;
    WaveletChoiceCriterion criterion = WaveletChoiceCriterion::EnergyEntropy;
    std::vector<WaveletScore> overall_scores;
};

// Picks the wavelet with maximal overall mean E/H. When the top two overall
// scores sit within 5% relative of each other the class-separation distance
// criterion decides instead.
MotherWaveletChoice select_mother_wavelet(
    const std::map<int, std::vector<std::vector<double>>>& per_class_segments,
    const std::vector<std::string>& library);

}  // namespace sigfeat
