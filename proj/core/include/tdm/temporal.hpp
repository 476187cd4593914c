#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tdm/scoring.hpp"

namespace tdm {

// Per-episode depressed/not bits, active episodes only, temporal order.
using BinarySeq = std::vector<std::uint8_t>;

// bit = 1 iff level >= Minimal (Standard) or dep_score > 0 (MDE); episodes
// without activity are dropped before binarization.
BinarySeq binarize(std::span<const EpisodeFeatures> features, Sensitivity sensitivity);

// Collapses consecutive duplicate values.
BinarySeq compress(const BinarySeq& bte);

// Number of 1-0-1 patterns in a compressed sequence; 0 when length <= 2.
int cycle_count(const BinarySeq& cbte);

// cycle_count(compress(bte)) / |compress(bte)|; 0 for an empty sequence.
double drfs(const BinarySeq& bte);

// Adjacent same-value 1-pairs over |bte|; 0 for an empty sequence.
double inertia(const BinarySeq& bte);

struct TemporalProfile {
    double is = 0.0;
    double drfs = 0.0;
};

TemporalProfile temporal_profile(std::span<const EpisodeFeatures> features,
                                 Sensitivity sensitivity);

}  // namespace tdm
