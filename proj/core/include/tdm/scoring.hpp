#pragma once

#include <map>
#include <string>
#include <vector>

#include "tdm/corpus.hpp"
#include "tdm/symptoms.hpp"

namespace tdm {

enum class ClinicalSetting { Clinical, NonClinical };
enum class Sensitivity { Standard, Mde };

struct ScoringMode {
    ClinicalSetting clinical = ClinicalSetting::NonClinical;
    Sensitivity sensitivity = Sensitivity::Standard;

    std::string to_string() const;
    static ScoringMode parse(std::string_view s);  // e.g. "clinical-standard"
};

// Percentage denominator for per-symptom day fractions. Prose intent is
// days-with-activity; the pseudocode's window-length denominator stays
// available behind this switch.
enum class DenominatorPolicy { ActiveDays, WindowDays };

enum class DepressionLevel { None = 0, Minimal, Mild, Moderate, ModeratelySevere, Severe };

const char* level_name(DepressionLevel level);

// One (up to) 14-day window of a user's timeline.
struct Episode {
    Day start_day = 0;
    Day end_day = 0;   // inclusive
    int total_days = 0;
    int active_days = 0;          // days with >= 1 raw post
    std::vector<Dsev> dsevs;      // one per day with >= 1 proper post
};

// Agitation and Retardation merge into one scored symptom (PHQ-9 conformity).
constexpr int kScoredSymptomCount = 9;

// Score contribution of one symptom from the percentage of days expressed:
// [0,20) -> 0, [20,50) -> 1, [50,85) -> 2, >= 85 -> 3.
int symptom_score(double percent_of_days);

struct ScoreResult {
    int dep_score = 0;
    bool clinically_depressed = false;  // a cardinal symptom reached >= 50% of days
    bool inactive = false;              // no active days; score undefined, reported 0
};

ScoreResult depression_score(const Episode& episode, ScoringMode mode,
                             DenominatorPolicy denom = DenominatorPolicy::ActiveDays);

// Score range table; throws ValidationError for negative scores.
DepressionLevel level_of(int dep_score);

// (total_days - active_days) / total_days.
double absence_ratio(const Episode& episode);

// Day-keyed per-user data shared by every window over the same timeline.
struct DayIndex {
    Day first_day = 0;
    Day last_day = 0;
    std::map<Day, int> raw_count;
    std::map<Day, Dsev> dsevs;                          // days with proper posts
    std::map<Day, std::vector<std::string>> proper_texts;
};

DayIndex build_day_index(const UserTimeline& timeline, const Detector& detector);

// Windows start at the first post date and advance by slide_days while the
// start does not exceed the last post date; each spans min(14, remaining).
std::vector<Episode> build_episodes(const DayIndex& days, int slide_days);
std::vector<Episode> build_episodes(const UserTimeline& timeline, int slide_days,
                                    const Detector& detector);

// Per-episode record consumed by the temporal and model layers.
struct EpisodeFeatures {
    Day start_day = 0;
    int total_days = 0;
    int active_days = 0;
    int dep_score = 0;
    DepressionLevel level = DepressionLevel::None;
    bool clinically_depressed = false;
    bool inactive = false;
    double absence_ratio = 0.0;
    std::vector<float> embedding;  // ELSEA, attached by the semantics pass
};

EpisodeFeatures episode_features(const Episode& episode, ScoringMode mode,
                                 DenominatorPolicy denom = DenominatorPolicy::ActiveDays);

}  // namespace tdm
