#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tdm/corpus.hpp"
#include "tdm/scoring.hpp"
#include "tdm/semantics.hpp"
#include "tdm/temporal.hpp"

namespace tdm {

// Per-user artifacts that do not depend on scoring mode or slide length;
// computed once and reused across every configuration.
struct PreparedUser {
    std::string user_id;
    Label label = Label::Control;
    DayIndex days;
    std::map<Day, Embedding> day_embeddings;  // DLSEA per day with proper posts
    Embedding atea;
};

struct PreparedCorpus {
    std::vector<PreparedUser> users;
    int dim = 0;
};

// Runs detection and embedding over an already-preprocessed corpus.
// Per-user work is parallelized; results are placed in corpus order.
PreparedCorpus prepare_corpus(const Corpus& corpus, const Detector& detector,
                              const Encoder& encoder, int workers = 1);

struct UserFeatures {
    std::string user_id;
    Label label = Label::Control;
    std::vector<EpisodeFeatures> episodes;
    TemporalProfile tp;
    Embedding atea;
};

// Episode features, temporal profile and ELSEA under one configuration.
std::vector<UserFeatures> features_for(const PreparedCorpus& prepared, ScoringMode mode,
                                       int slide_days,
                                       DenominatorPolicy denom = DenominatorPolicy::ActiveDays);

// Convenience: preprocess happens upstream; prepare + features in one call.
std::vector<UserFeatures> extract_features(const Corpus& corpus, const Detector& detector,
                                           const Encoder& encoder, ScoringMode mode,
                                           int slide_days, int workers = 1,
                                           DenominatorPolicy denom = DenominatorPolicy::ActiveDays);

inline constexpr const char* kFeatureCsvHeader =
    "user_id,label,episode_start,total_days,active_days,dep_score,level,absence_ratio,"
    "mode,slide,is,drfs";

std::string features_csv(std::span<const UserFeatures> users, ScoringMode mode, int slide_days);
void write_features_csv(const std::string& path, std::span<const UserFeatures> users,
                        ScoringMode mode, int slide_days);

}  // namespace tdm
