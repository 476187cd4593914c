#pragma once

#include <array>
#include <bitset>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdm/timeutil.hpp"

namespace tdm {

constexpr int kSymptomCount = 10;

// The ten depression symptoms; Anhedonia and LowMood are the cardinal pair.
enum class Symptom : int {
    Anhedonia = 0,
    LowMood = 1,
    SleepDisturbance = 2,
    Fatigue = 3,
    AppetiteChange = 4,
    Worthlessness = 5,
    ConcentrationProblems = 6,
    Agitation = 7,
    Retardation = 8,
    SuicidalIdeation = 9,
};

const char* symptom_name(Symptom s);
std::optional<Symptom> symptom_from_name(std::string_view name);

using SymptomSet = std::bitset<kSymptomCount>;

// Per-day expression vector: bit i set iff symptom i appeared that day.
struct Dsev {
    Day day = 0;
    SymptomSet bits;
};

// Per-post symptom detector. Implementations must be deterministic and
// shareable across threads after construction.
struct Detector {
    std::string name;
    std::function<SymptomSet(std::string_view)> detect;
};

// Phrase lists per symptom, lowercase, matched on token boundaries.
using Lexicon = std::array<std::vector<std::string>, kSymptomCount>;

// Shipped reference lexicon assembled from PHQ-9 wording; also drives the
// synthetic generator so detection is exact-by-construction there.
const Lexicon& default_lexicon();

// JSON map {"Anhedonia": ["...", ...], ...}. Throws ParseError/ValidationError.
Lexicon load_lexicon(const std::string& path);

// True iff `phrase` occurs in `text` delimited by non-alphanumeric characters
// (or string edges) on both sides.
bool contains_token_bounded(std::string_view text, std::string_view phrase);

// Throws ValidationError on an empty phrase list or non-lowercase phrases.
Detector lexicon_detector(const Lexicon& lexicon);

// Bitwise OR of per-post detections over one calendar day's proper posts.
Dsev dsev_for_day(Day day, const std::vector<std::string>& day_posts, const Detector& detector);

}  // namespace tdm
