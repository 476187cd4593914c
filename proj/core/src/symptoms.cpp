#include "tdm/symptoms.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "tdm/error.hpp"

namespace tdm {

using nlohmann::json;

namespace {

constexpr const char* kSymptomNames[kSymptomCount] = {
    "Anhedonia",        "LowMood",       "SleepDisturbance",      "Fatigue",
    "AppetiteChange",   "Worthlessness", "ConcentrationProblems", "Agitation",
    "Retardation",      "SuicidalIdeation",
};

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

}  // namespace

const char* symptom_name(Symptom s) { return kSymptomNames[static_cast<int>(s)]; }

std::optional<Symptom> symptom_from_name(std::string_view name) {
    for (int i = 0; i < kSymptomCount; ++i)
        if (name == kSymptomNames[i]) return static_cast<Symptom>(i);
    return std::nullopt;
}

bool contains_token_bounded(std::string_view text, std::string_view phrase) {
    if (phrase.empty() || phrase.size() > text.size()) return false;
    size_t pos = 0;
    while ((pos = text.find(phrase, pos)) != std::string_view::npos) {
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const size_t end = pos + phrase.size();
        const bool right_ok = end == text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

Detector lexicon_detector(const Lexicon& lexicon) {
    for (int i = 0; i < kSymptomCount; ++i) {
        if (lexicon[static_cast<size_t>(i)].empty())
            throw ValidationError(std::string("lexicon has no phrases for symptom ") +
                                  kSymptomNames[i]);
        for (const auto& phrase : lexicon[static_cast<size_t>(i)]) {
            if (phrase.empty())
                throw ValidationError(std::string("empty phrase under symptom ") +
                                      kSymptomNames[i]);
            for (char c : phrase)
                if (c >= 'A' && c <= 'Z')
                    throw ValidationError("lexicon phrases must be lowercase: '" + phrase + "'");
        }
    }
    Detector d;
    d.name = "lexicon";
    d.detect = [lexicon](std::string_view text) {
        SymptomSet hits;
        for (int i = 0; i < kSymptomCount; ++i) {
            for (const auto& phrase : lexicon[static_cast<size_t>(i)]) {
                if (contains_token_bounded(text, phrase)) {
                    hits.set(static_cast<size_t>(i));
                    break;
                }
            }
        }
        return hits;
    };
    return d;
}

Dsev dsev_for_day(Day day, const std::vector<std::string>& day_posts, const Detector& detector) {
    Dsev v;
    v.day = day;
    for (const auto& post : day_posts) v.bits |= detector.detect(post);
    return v;
}

Lexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open lexicon file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad lexicon file: ") + e.what());
    }
    Lexicon lex;
    for (const auto& [key, value] : j.items()) {
        const auto symptom = symptom_from_name(key);
        if (!symptom) throw ValidationError("unknown symptom name in lexicon: '" + key + "'");
        for (const auto& phrase : value)
            lex[static_cast<size_t>(*symptom)].push_back(phrase.get<std::string>());
    }
    for (int i = 0; i < kSymptomCount; ++i)
        if (lex[static_cast<size_t>(i)].empty())
            throw ValidationError(std::string("lexicon file is missing symptom ") +
                                  kSymptomNames[i]);
    return lex;
}

}  // namespace tdm
