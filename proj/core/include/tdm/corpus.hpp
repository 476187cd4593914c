#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tdm/timeutil.hpp"

namespace tdm {

enum class Label { Depressed, Control };

const char* label_name(Label l);
Label label_from_name(std::string_view s);

struct Post {
    UnixTime ts = 0;
    std::string text;
    bool retweet = false;
    bool reply = false;

    Day day() const { return day_of(ts); }
};

struct UserTimeline {
    std::string user_id;
    Label label = Label::Control;
    std::vector<Post> posts;         // raw, ascending by timestamp
    std::vector<Post> proper_posts;  // subsequence surviving preprocessing

    // Whole days between first and last raw post, inclusive.
    int span_days() const;
    Day first_day() const;
    Day last_day() const;
};

struct Corpus {
    std::string name;
    std::vector<UserTimeline> users;
    std::string metadata;  // generator parameters as JSON text, empty otherwise
};

// One JSON object per line:
// {"user_id": str, "label": "depressed"|"control",
//  "posts": [{"ts": "YYYY-MM-DDThh:mm:ssZ", "text": str, "retweet": bool, "reply": bool}]}
// Posts may be unsorted in the file; the loader sorts ascending.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

// Reference non-English guess: among alphabetic-ish codepoints, more than
// half are outside ASCII. Pluggable for real language ID.
bool default_non_english(std::string_view text);

using NonEnglishPredicate = std::function<bool(std::string_view)>;

// Keeps users with >= min_posts raw posts, a timeline span >= min_days and a
// non-English post fraction <= max_non_english_ratio.
Corpus filter_users(const Corpus& corpus, int min_posts, int min_days,
                    double max_non_english_ratio,
                    const NonEnglishPredicate& non_english = default_non_english);

constexpr int kSynthSymptoms = 10;

struct SynthClassParams {
    double daily_post_rate_mean = 3.0;
    double silence_prob = 0.1;
    std::array<double, kSynthSymptoms> symptom_inject_prob{};  // per post, per symptom
};

struct SynthSpec {
    int n_depressed = 1;
    int n_control = 1;
    int history_days = 120;
    SynthClassParams depressed;
    SynthClassParams control;
    int recurrence_cycle_days = 0;  // 0 = symptoms may appear on any day
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError
};

// Deterministic labelled corpus; every generated user passes
// filter_users(50, 30, 0.2).
Corpus synthesize(const SynthSpec& spec);

// Serialized generator parameters, stored in Corpus::metadata.
std::string synth_spec_json(const SynthSpec& spec);

}  // namespace tdm
