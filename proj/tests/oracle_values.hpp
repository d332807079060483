// Generated by tests/oracles/gen_oracles.py. Do not edit.
#pragma once

#include <cstddef>
#include <vector>

namespace oracle {

inline constexpr double kScavSwapLoss = 0.1269280110429727;
inline const std::vector<std::vector<double>> kScavD3 = {{0.248, 2.276, 2.072}, {2.188, 1.54, 1.452}, {1.956, 3.812, 3.668}};
inline constexpr double kScavD3NormLam05 = 1.7236886914829148;
inline constexpr double kScavD3RawLam05 = 1.5645268933339203;
inline const std::vector<std::vector<double>> kCavVideo0 = {{0.004, 0.359, -0.102}, {0.059, 0.521, 0.7}};
inline const std::vector<std::vector<double>> kCavVideo1 = {{-0.45, -0.934, -0.524}, {0.169, 0.338, 0.492}, {-0.241, -0.016, 0.835}};
inline const std::vector<std::vector<double>> kCavAudio0 = {{-0.386, -0.59, 0.327}, {-0.09, -0.977, -0.317}, {-0.058, -0.229, 0.322}, {0.782, -0.055, 0.358}};
inline const std::vector<std::vector<double>> kCavAudio1 = {{0.815, -0.112, -0.634}, {0.15, -0.876, -0.139}};
inline constexpr double kCavLossTau02 = 2.8974045526660945;
inline const std::vector<std::vector<double>> kDtwX = {{0.44, 0.31}, {-0.447, 0.294}, {0.854, 0.827}};
inline const std::vector<std::vector<double>> kDtwY = {{-0.252, 0.481}, {0.837, 0.618}, {0.857, -0.405}, {0.469, -0.301}};
inline constexpr double kSoftDtwGamma1 = -0.06768158861099464;
inline constexpr double kSoftDtwGamma01 = 0.2529523221371159;
inline constexpr double kHardDtw = 0.2545365;
inline constexpr int kDtwPaths3x4 = 25;
inline const std::vector<std::vector<double>> kEuclX = {{0.079, -0.221, 0.371}, {0.753, -0.239, -0.453}, {0.307, 0.136, 0.069}, {-0.49, -0.592, -0.324}, {-0.955, 0.327, -0.558}};
inline const std::vector<std::vector<double>> kEuclY = {{0.446, -0.263, -0.802}, {-0.819, -0.796, -0.776}, {-0.912, 0.686, -0.764}};
inline constexpr double kEuclV2A = 0.5040081111111111;
inline constexpr double kEuclA2V = 0.41628698333333336;
inline const std::vector<std::vector<double>> kWassX = {{-0.292, -0.491}, {0.218, -0.844}, {-0.556, -0.009}};
inline const std::vector<std::vector<double>> kWassY = {{0.712, 0.399}, {0.761, -0.657}, {-0.624, -0.961}};
inline constexpr double kWassBrutePos0 = 0.40587166666666663;
inline constexpr double kWassBrutePos1 = 0.5068103333333333;
inline const std::vector<std::vector<double>> kAggQuery0 = {{-0.193, 0.288, -0.43, 0.098}, {0.347, 0.845, -0.117, 0.076}, {0.031, 0.096, 0.601, -0.935}};
inline const std::vector<std::vector<double>> kAggQuery1 = {{-0.005, -0.877, 0.386, 0.669}, {-0.365, -0.698, -0.068, 0.989}, {-0.507, -0.87, 0.678, 0.887}};
inline const std::vector<std::vector<double>> kAggQuery2 = {{-0.698, 0.164, -0.188, -0.663}, {-0.216, 0.512, -0.36, -0.325}, {0.241, -0.224, -0.568, 0.12}};
inline const std::vector<std::vector<double>> kAggQuery3 = {{0.632, 0.412, 0.805, 0.454}, {-0.786, -0.013, -0.407, -0.331}, {-0.031, 0.683, 0.212, 0.769}};
inline const std::vector<std::vector<double>> kAggCand0 = {{-0.313, -0.189, 0.155, -0.407}, {0.653, 0.877, 0.081, 0.515}};
inline const std::vector<std::vector<double>> kAggCand1 = {{-0.819, -0.165, 0.501, 0.112}, {-0.445, -0.7, 0.375, -0.953}};
inline const std::vector<std::vector<double>> kAggCand2 = {{-0.35, -0.337, -0.755, 0.268}, {-0.32, -0.726, -0.18, 0.821}};
inline const std::vector<std::vector<double>> kAggCand3 = {{0.653, -0.517, -0.831, 0.463}, {0.142, -0.284, -0.774, 0.306}};
inline const std::vector<std::vector<double>> kAggCand4 = {{0.829, 0.097, 0.566, -0.622}, {-0.928, -0.849, 0.719, 0.948}};
inline const std::vector<std::vector<double>> kAggCand5 = {{0.268, -0.335, 0.985, -0.216}, {0.41, 0.921, 0.719, 0.519}};
inline const std::vector<std::vector<double>> kAggCand6 = {{-0.304, -0.41, 0.862, 0.422}, {0.698, 0.47, -0.739, 0.882}};
inline const std::vector<std::vector<double>> kAggCand7 = {{0.942, -0.816, 0.065, -0.457}, {-0.881, 0.487, -0.373, -0.27}};
inline const std::vector<std::size_t> kAggOrder0 = {0, 5, 7, 1, 6, 3, 4, 2};
inline const std::vector<std::size_t> kAggOrder1 = {4, 2, 6, 1, 3, 5, 7, 0};
inline const std::vector<std::size_t> kAggOrder2 = {7, 1, 3, 2, 0, 6, 5, 4};
inline const std::vector<std::size_t> kAggOrder3 = {0, 5, 6, 4, 2, 1, 3, 7};
inline const std::vector<std::vector<double>> kSeqQuery = {{0.346, 0.281, -0.913}, {0.071, 0.307, -0.914}, {-0.5, 0.657, 0.364}, {0.383, 0.869, 0.049}};
inline const std::vector<std::vector<double>> kSeqCand0 = {{-0.181, 0.594, -0.346}, {-0.198, 0.918, 0.709}, {0.212, 0.52, -0.224}, {-0.878, 0.395, -0.393}, {-0.379, -0.008, 0.762}, {-0.044, 0.622, 0.33}};
inline const std::vector<std::vector<double>> kSeqCand1 = {{0.149, 0.983, 0.539}, {-0.827, -0.764, 0.366}, {-0.632, -0.24, -0.78}, {-0.513, -0.411, 0.643}, {0.851, 0.505, -0.19}};
inline const std::vector<std::vector<double>> kSeqCand2 = {{-0.235, -0.275, 0.074}, {0.952, 0.016, -0.384}, {-0.589, 0.583, 0.458}, {0.036, 0.671, -0.858}};
inline const std::vector<std::size_t> kSeqOrder = {0, 2, 1};
inline constexpr double kSeqDist0 = 0.20677150925925922;
inline constexpr double kSeqDist1 = 0.5346095277777778;
inline constexpr double kSeqDist2 = 0.31392525;

}  // namespace oracle
