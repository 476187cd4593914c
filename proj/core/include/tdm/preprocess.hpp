#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tdm/corpus.hpp"

namespace tdm {

struct PreprocessTables {
    std::unordered_map<std::string, std::string> contractions;
    std::vector<std::pair<char32_t, char32_t>> emoji_ranges;  // inclusive
};

const PreprocessTables& default_tables();
PreprocessTables load_tables(const std::string& contractions_path,
                             const std::string& emoji_ranges_path);

struct PreprocessResult {
    bool kept = false;
    std::string text;  // cleaned text when kept
    std::string rule;  // removal rule name when not kept
};

// Removal rule names reported by preprocess_post.
inline constexpr const char* kRuleRetweetReply = "retweet-reply";
inline constexpr const char* kRuleSelfDisclosure = "self-disclosure";
inline constexpr const char* kRuleMinLength = "min-length";

// Cleaning pipeline: lowercase; drop retweets/replies; drop one-character
// words (except a/i/u) and digit tokens; expand contractions; collapse
// letter runs of three or more; drop self-disclosure posts; strip punctuation
// except . , ? !; strip URL tokens; strip non-ASCII characters inside words;
// drop hashtag tokens; strip emoji; finally drop the post if fewer than three
// word tokens remain.
PreprocessResult preprocess_post(std::string_view text, bool is_retweet, bool is_reply,
                                 const PreprocessTables& tables = default_tables());

struct PreprocessReport {
    long input_count = 0;
    long kept_count = 0;
    std::map<std::string, long> removed_by_rule;  // first removing rule owns the post

    void merge(const PreprocessReport& other);
    std::string to_json() const;
};

// Fills timeline.proper_posts; raw posts are left untouched (they still count
// toward posting activity).
PreprocessReport preprocess_timeline(UserTimeline& timeline,
                                     const PreprocessTables& tables = default_tables());

PreprocessReport preprocess_corpus(Corpus& corpus,
                                   const PreprocessTables& tables = default_tables());

}  // namespace tdm
