#include "resources.hpp"

#include "tdm/preprocess.hpp"
#include "tdm/symptoms.hpp"

namespace tdm {

const PreprocessTables& default_tables() {
    static const PreprocessTables tables = [] {
        PreprocessTables t;
        t.contractions = {
            {"i'm", "i am"},           {"i've", "i have"},
            {"i'll", "i will"},        {"i'd", "i would"},
            {"you're", "you are"},     {"you've", "you have"},
            {"you'll", "you will"},    {"you'd", "you would"},
            {"he's", "he is"},         {"she's", "she is"},
            {"it's", "it is"},         {"we're", "we are"},
            {"we've", "we have"},      {"we'll", "we will"},
            {"they're", "they are"},   {"they've", "they have"},
            {"they'll", "they will"},  {"can't", "cannot"},
            {"won't", "will not"},     {"don't", "do not"},
            {"doesn't", "does not"},   {"didn't", "did not"},
            {"isn't", "is not"},       {"aren't", "are not"},
            {"wasn't", "was not"},     {"weren't", "were not"},
            {"haven't", "have not"},   {"hasn't", "has not"},
            {"hadn't", "had not"},     {"wouldn't", "would not"},
            {"couldn't", "could not"}, {"shouldn't", "should not"},
            {"mustn't", "must not"},   {"needn't", "need not"},
            {"that's", "that is"},     {"there's", "there is"},
            {"here's", "here is"},     {"what's", "what is"},
            {"who's", "who is"},       {"let's", "let us"},
            {"ain't", "am not"},       {"could've", "could have"},
            {"would've", "would have"},{"should've", "should have"},
            {"might've", "might have"},{"y'all", "you all"},
        };
        t.emoji_ranges = {
            {0x200D, 0x200D},   // zero-width joiner
            {0x2600, 0x27BF},   // misc symbols, dingbats
            {0x2B00, 0x2BFF},   // misc symbols and arrows
            {0xFE00, 0xFE0F},   // variation selectors
            {0x1F000, 0x1F0FF}, // mahjong, dominoes, cards
            {0x1F1E6, 0x1F1FF}, // regional indicators
            {0x1F300, 0x1F5FF}, // misc pictographs
            {0x1F600, 0x1F64F}, // emoticons
            {0x1F680, 0x1F6FF}, // transport
            {0x1F700, 0x1F77F}, // alchemical
            {0x1F900, 0x1F9FF}, // supplemental symbols
            {0x1FA70, 0x1FAFF}, // symbols extended-A
        };
        return t;
    }();
    return tables;
}

const Lexicon& default_lexicon() {
    static const Lexicon lex = [] {
        Lexicon l;
        l[static_cast<int>(Symptom::Anhedonia)] = {
            "little interest", "no interest", "lost interest", "no pleasure",
            "cannot enjoy anything", "do not enjoy", "nothing is fun", "nothing excites me",
            "feel empty", "feel numb", "no motivation", "stopped caring",
        };
        l[static_cast<int>(Symptom::LowMood)] = {
            "feel sad", "feeling sad", "so sad", "feel down", "feeling down",
            "feel depressed", "feeling depressed", "feel hopeless", "feeling hopeless",
            "feel miserable", "feeling blue", "want to cry", "feel low",
        };
        l[static_cast<int>(Symptom::SleepDisturbance)] = {
            "cannot sleep", "could not sleep", "trouble sleeping", "insomnia",
            "awake all night", "up all night", "barely slept", "sleeping too much",
            "slept all day", "no sleep again",
        };
        l[static_cast<int>(Symptom::Fatigue)] = {
            "so tired", "feel tired", "feeling tired", "exhausted", "no energy",
            "feeling drained", "worn out", "fatigued", "too tired to move",
        };
        l[static_cast<int>(Symptom::AppetiteChange)] = {
            "no appetite", "poor appetite", "lost my appetite", "do not feel like eating",
            "skipped meals", "overeating", "eating too much", "binge eating", "cannot eat",
        };
        l[static_cast<int>(Symptom::Worthlessness)] = {
            "feel worthless", "feel like a failure", "i am a failure", "hate myself",
            "feel guilty", "feel useless", "not good enough", "let everyone down",
            "disappointed in myself",
        };
        l[static_cast<int>(Symptom::ConcentrationProblems)] = {
            "cannot concentrate", "cannot focus", "trouble concentrating", "trouble focusing",
            "hard to focus", "mind keeps wandering", "cannot think straight",
            "keep losing focus",
        };
        l[static_cast<int>(Symptom::Agitation)] = {
            "restless", "so restless", "fidgety", "cannot sit still", "pacing around",
            "on edge", "keyed up", "agitated", "crawling out of my skin",
        };
        l[static_cast<int>(Symptom::Retardation)] = {
            "moving slowly", "slowed down", "speaking slowly", "everything takes forever",
            "sluggish", "feel sluggish", "in slow motion", "body feels heavy",
        };
        l[static_cast<int>(Symptom::SuicidalIdeation)] = {
            "better off dead", "want to die", "end my life", "kill myself",
            "hurting myself", "self harm", "no reason to live", "thoughts of death",
            "do not want to be here",
        };
        return l;
    }();
    return lex;
}

namespace detail {

const std::vector<std::string>& synth_filler_sentences() {
    static const std::vector<std::string> sentences = {
        "the coffee at the corner shop was great today",
        "watched the game with friends last night",
        "planning a trip to the lake next month",
        "the new album from that band is out now",
        "traffic on the highway was heavy this morning",
        "trying a new recipe for dinner tonight",
        "the weather looks clear for the weekend",
        "finished reading another chapter on the train",
        "the garden needs watering again this evening",
        "meeting the team about the quarterly report",
        "found a great deal on running shoes",
        "the museum exhibit downtown closes soon",
        "baking bread again while it rains outside",
        "caught the early bus into town today",
        "the puppy learned a new trick this week",
        "repainting the fence out back this weekend",
        "leftover pasta for lunch at my desk",
        "the library added new titles to the shelf",
        "cleaned the kitchen and sorted the mail",
        "that podcast episode about space was interesting",
    };
    return sentences;
}

}  // namespace detail
}  // namespace tdm
