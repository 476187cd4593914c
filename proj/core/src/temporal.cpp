#include "tdm/temporal.hpp"

namespace tdm {

BinarySeq binarize(std::span<const EpisodeFeatures> features, Sensitivity sensitivity) {
    BinarySeq bte;
    bte.reserve(features.size());
    for (const auto& f : features) {
        if (f.inactive || f.active_days == 0) continue;
        const bool depressed = sensitivity == Sensitivity::Mde
                                   ? f.dep_score > 0
                                   : f.level >= DepressionLevel::Minimal;
        bte.push_back(depressed ? 1 : 0);
    }
    return bte;
}

BinarySeq compress(const BinarySeq& bte) {
    BinarySeq cbte;
    if (bte.empty()) return cbte;
    cbte.push_back(bte.front());
    for (const auto v : bte)
        if (v != cbte.back()) cbte.push_back(v);
    return cbte;
}

int cycle_count(const BinarySeq& cbte) {
    if (cbte.size() <= 2) return 0;
    int count = 0;
    for (size_t i = 1; i + 1 < cbte.size(); ++i)
        if (cbte[i] == 0 && cbte[i - 1] == 1 && cbte[i + 1] == 1) ++count;
    return count;
}

double drfs(const BinarySeq& bte) {
    if (bte.empty()) return 0.0;
    const BinarySeq cbte = compress(bte);
    return static_cast<double>(cycle_count(cbte)) / static_cast<double>(cbte.size());
}

double inertia(const BinarySeq& bte) {
    if (bte.empty()) return 0.0;
    int pairs = 0;
    for (size_t i = 0; i + 1 < bte.size(); ++i)
        if (bte[i] == 1 && bte[i + 1] == 1) ++pairs;
    return static_cast<double>(pairs) / static_cast<double>(bte.size());
}

TemporalProfile temporal_profile(std::span<const EpisodeFeatures> features,
                                 Sensitivity sensitivity) {
    const BinarySeq bte = binarize(features, sensitivity);
    return TemporalProfile{inertia(bte), drfs(bte)};
}

}  // namespace tdm
