#pragma once

#include <string>
#include <vector>

namespace sigfeat {

// Orthogonal scaling filters (reconstruction low-pass, sum = sqrt(2)),
// documented to >= 15 significant digits. haar/db values come from exact
// closed forms evaluated in 60-digit arithmetic; symlets from
// least-asymmetric spectral factorization; coif3 Newton-refined against the
// orthonormality + vanishing-moment system. Do not edit values without
// bumping the version: decompositions are part of persisted artifacts.
inline constexpr int kWaveletFilterVersion = 1;

struct WaveletFilter {
    const char* name;
    std::vector<double> rec_lo;
};

inline const std::vector<WaveletFilter>& wavelet_filters() {
    static const std::vector<WaveletFilter> filters = {
        {"haar",
         {0.707106781186547524, 0.707106781186547524}},
        {"db2",
         {0.482962913144534143, 0.836516303737807906, 0.224143868042013381,
          -0.129409522551260381}},
        {"db4",
         {0.230377813308896501, 0.714846570552915647, 0.630880767929858908,
          -0.0279837694168598542, -0.187034811719093084, 0.0308413818355607636,
          0.0328830116668851997, -0.0105974017850690321}},
        {"db8",
         {0.0544158422431040046, 0.312871590914299966, 0.675630736297289807,
          0.585354683654206709, -0.0158291052563493062, -0.284015542961546930,
          0.000472484573913282775, 0.128747426620478464, -0.0173693010018075462,
          -0.0440882539307947515, 0.0139810279173982829, 0.00874609404740577671,
          -0.00487035299345157431, -0.000391740373376947054, 0.000675449406450569358,
          -0.000117476784124769533}},
        {"sym4",
         {0.0322231006040514677, -0.0126039672620313037, -0.0992195435766335325,
          0.297857795605306051, 0.803738751805132077, 0.497618667632774989,
          -0.0296355276460024921, -0.0757657147895022132}},
        {"sym8",
         {-0.00338241595100500256, -0.000542132331800010691, 0.0316950878115259912,
          0.00760748732497660820, -0.143294238351272659, -0.0612733590678110781,
          0.481359651259053388, 0.777185751699628033, 0.364441894836178936,
          -0.0519458381078818013, -0.0272190299171034856, 0.0491371796737302868,
          0.00380875201389448950, -0.0149522583370621988, -0.000302920514724133077,
          0.00188995033276768915}},
        {"coif3",
         {-0.00379351286438080168, 0.00778259642567274576, 0.0234526961420771662,
          -0.0657719112814693672, -0.0611233900029725413, 0.405176902409118199,
          0.793777222626087175, 0.428483476377369981, -0.0717998216191548340,
          -0.0823019271062998185, 0.0345550275732977330, 0.0158805448636694509,
          -0.00900797613673062390, -0.00257451768813679701, 0.00111751877083063022,
          0.000466216959820402869, -0.0000709833025063790056, -0.0000345997731972727739}},
    };
    return filters;
}

}  // namespace sigfeat
