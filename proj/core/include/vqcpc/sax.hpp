#pragma once
#include <cstdint>
#include <vector>

#include "vqcpc/datapipe.hpp"
#include "vqcpc/kmeans.hpp"
#include "vqcpc/tokens.hpp"

namespace vqcpc {

// ============================================================================
// Classical discretization baselines: PAA, SAX on the magnitude signal, and
// SAX-REPEAT (per-channel SAX + k-means over the per-frame symbol tuples).
// ============================================================================

struct SaxConfig {
    int64_t alphabet_size = 512;
    int64_t paa_ratio = 2;  // timesteps per symbol
};

// Inverse standard-normal CDF (Acklam's approximation + one Halley step;
// accurate to machine precision on (0, 1)).
double inv_normal_cdf(double p);

// alphabet_size - 1 strictly increasing quantiles dividing N(0,1) into
// equiprobable bins.
std::vector<double> normal_breakpoints(int64_t alphabet_size);

// Symbol for a z-scored value: bin j iff b_{j-1} < v <= b_j.
int64_t sax_bin(double v, const std::vector<double>& breakpoints);

// Segment means; throws NonDivisibleLength when series length is not a
// multiple of `segments`.
std::vector<double> paa(const std::vector<double>& series, int64_t segments);

// Magnitude SAX: per-timestep Euclidean norm over channels, z-normalized per
// window, PAA to W/paa_ratio symbols, binned by the normal breakpoints.
// A constant-magnitude window emits the symbol of the bin containing 0.
RawTokenSequence sax_discretize(const SensorWindow& window, const SaxConfig& cfg);

// Per-channel symbol tuples (each channel z-normalized, PAA'd and binned
// independently); one row per output frame, C entries each.
std::vector<std::vector<int64_t>> channel_symbol_tuples(const SensorWindow& window,
                                                        const SaxConfig& cfg);

struct SaxRepeatModel {
    SaxConfig cfg;
    KMeansResult clusters;
    bool k_capped = false;  // true when k was reduced to the distinct-tuple count
};

// Fits k-means over the train split's symbol tuples (symbols as integer
// coordinates). k is capped at the number of distinct tuples.
SaxRepeatModel sax_repeat_fit(const std::vector<SensorWindow>& train_windows,
                              const SaxConfig& cfg, int64_t k, uint64_t seed);

RawTokenSequence sax_repeat_discretize(const SensorWindow& window, const SaxRepeatModel& model);

// Whole-corpus helpers.
std::vector<RawTokenSequence> sax_corpus(const std::vector<SensorWindow>& windows,
                                         const SaxConfig& cfg);
std::vector<RawTokenSequence> sax_repeat_corpus(const std::vector<SensorWindow>& windows,
                                                const SaxRepeatModel& model);

}  // namespace vqcpc
