#include "tdm/scoring.hpp"

#include <algorithm>

#include "tdm/error.hpp"

namespace tdm {

std::string ScoringMode::to_string() const {
    std::string s = clinical == ClinicalSetting::Clinical ? "clinical" : "nonclinical";
    s += sensitivity == Sensitivity::Mde ? "-mde" : "-standard";
    return s;
}

ScoringMode ScoringMode::parse(std::string_view s) {
    ScoringMode m;
    std::string_view base = s;
    if (s.size() > 4 && s.substr(s.size() - 4) == "-mde") {
        m.sensitivity = Sensitivity::Mde;
        base = s.substr(0, s.size() - 4);
    } else if (s.size() > 9 && s.substr(s.size() - 9) == "-standard") {
        base = s.substr(0, s.size() - 9);
    }
    if (base == "clinical") m.clinical = ClinicalSetting::Clinical;
    else if (base == "nonclinical") m.clinical = ClinicalSetting::NonClinical;
    else throw ValidationError("unknown scoring mode '" + std::string(s) + "'");
    return m;
}

const char* level_name(DepressionLevel level) {
    switch (level) {
        case DepressionLevel::None: return "none";
        case DepressionLevel::Minimal: return "minimal";
        case DepressionLevel::Mild: return "mild";
        case DepressionLevel::Moderate: return "moderate";
        case DepressionLevel::ModeratelySevere: return "moderately_severe";
        case DepressionLevel::Severe: return "severe";
    }
    return "?";
}

int symptom_score(double percent_of_days) {
    if (percent_of_days >= 85.0) return 3;
    if (percent_of_days >= 50.0) return 2;
    if (percent_of_days >= 20.0) return 1;
    return 0;
}

ScoreResult depression_score(const Episode& episode, ScoringMode mode, DenominatorPolicy denom) {
    ScoreResult result;
    if (episode.active_days <= 0) {
        result.inactive = true;
        return result;
    }
    const int denominator =
        denom == DenominatorPolicy::ActiveDays ? episode.active_days : episode.total_days;

    // Days each raw symptom was expressed, then merge Agitation/Retardation
    // by OR before the fraction is taken.
    int day_count[kSymptomCount] = {};
    int merged_agit_retard = 0;
    for (const auto& dsev : episode.dsevs) {
        for (int s = 0; s < kSymptomCount; ++s)
            if (dsev.bits.test(static_cast<size_t>(s))) ++day_count[s];
        if (dsev.bits.test(static_cast<size_t>(Symptom::Agitation)) ||
            dsev.bits.test(static_cast<size_t>(Symptom::Retardation)))
            ++merged_agit_retard;
    }

    const int scored_days[kScoredSymptomCount] = {
        day_count[static_cast<int>(Symptom::Anhedonia)],
        day_count[static_cast<int>(Symptom::LowMood)],
        day_count[static_cast<int>(Symptom::SleepDisturbance)],
        day_count[static_cast<int>(Symptom::Fatigue)],
        day_count[static_cast<int>(Symptom::AppetiteChange)],
        day_count[static_cast<int>(Symptom::Worthlessness)],
        day_count[static_cast<int>(Symptom::ConcentrationProblems)],
        merged_agit_retard,
        day_count[static_cast<int>(Symptom::SuicidalIdeation)],
    };

    for (int cardinal : {static_cast<int>(Symptom::Anhedonia), static_cast<int>(Symptom::LowMood)}) {
        const double percent = 100.0 * day_count[cardinal] / denominator;
        if (percent >= 50.0) result.clinically_depressed = true;
    }

    int total = 0;
    for (int s = 0; s < kScoredSymptomCount; ++s) {
        if (mode.sensitivity == Sensitivity::Mde) {
            total += scored_days[s] >= 1 ? 1 : 0;
        } else {
            total += symptom_score(100.0 * scored_days[s] / denominator);
        }
    }
    result.dep_score =
        (mode.clinical == ClinicalSetting::Clinical && !result.clinically_depressed) ? 0 : total;
    return result;
}

DepressionLevel level_of(int dep_score) {
    if (dep_score < 0) throw ValidationError("dep_score must be non-negative");
    if (dep_score < 4) return DepressionLevel::None;
    if (dep_score < 9) return DepressionLevel::Minimal;
    if (dep_score < 14) return DepressionLevel::Mild;
    if (dep_score < 19) return DepressionLevel::Moderate;
    if (dep_score < 27) return DepressionLevel::ModeratelySevere;
    return DepressionLevel::Severe;
}

double absence_ratio(const Episode& episode) {
    if (episode.total_days < 1) throw ValidationError("episode window must span >= 1 day");
    return static_cast<double>(episode.total_days - episode.active_days) / episode.total_days;
}

DayIndex build_day_index(const UserTimeline& timeline, const Detector& detector) {
    DayIndex index;
    if (timeline.posts.empty()) return index;
    index.first_day = timeline.first_day();
    index.last_day = timeline.last_day();
    for (const auto& post : timeline.posts) ++index.raw_count[post.day()];
    for (const auto& post : timeline.proper_posts)
        index.proper_texts[post.day()].push_back(post.text);
    for (const auto& [day, texts] : index.proper_texts)
        index.dsevs.emplace(day, dsev_for_day(day, texts, detector));
    return index;
}

std::vector<Episode> build_episodes(const DayIndex& days, int slide_days) {
    if (slide_days != 1 && slide_days != 7 && slide_days != 14)
        throw ValidationError("slide length must be 1, 7 or 14 days");
    std::vector<Episode> episodes;
    if (days.raw_count.empty()) return episodes;
    for (Day start = days.first_day; start <= days.last_day;
         start += static_cast<Day>(slide_days)) {
        Episode e;
        e.start_day = start;
        e.total_days = std::min(14, static_cast<int>(days.last_day - start) + 1);
        e.end_day = start + static_cast<Day>(e.total_days) - 1;
        for (Day d = start; d <= e.end_day; ++d) {
            if (days.raw_count.count(d)) ++e.active_days;
            const auto it = days.dsevs.find(d);
            if (it != days.dsevs.end()) e.dsevs.push_back(it->second);
        }
        episodes.push_back(std::move(e));
    }
    return episodes;
}

std::vector<Episode> build_episodes(const UserTimeline& timeline, int slide_days,
                                    const Detector& detector) {
    return build_episodes(build_day_index(timeline, detector), slide_days);
}

EpisodeFeatures episode_features(const Episode& episode, ScoringMode mode,
                                 DenominatorPolicy denom) {
    EpisodeFeatures f;
    f.start_day = episode.start_day;
    f.total_days = episode.total_days;
    f.active_days = episode.active_days;
    const ScoreResult r = depression_score(episode, mode, denom);
    f.dep_score = r.dep_score;
    f.clinically_depressed = r.clinically_depressed;
    f.inactive = r.inactive;
    f.level = level_of(r.dep_score);
    f.absence_ratio = absence_ratio(episode);
    return f;
}

}  // namespace tdm
