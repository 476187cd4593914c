#include "tdm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "resources.hpp"
#include "tdm/error.hpp"
#include "tdm/rng.hpp"
#include "tdm/symptoms.hpp"

namespace tdm {

using nlohmann::json;

const char* label_name(Label l) { return l == Label::Depressed ? "depressed" : "control"; }

Label label_from_name(std::string_view s) {
    if (s == "depressed") return Label::Depressed;
    if (s == "control") return Label::Control;
    throw ValidationError("unknown label '" + std::string(s) + "'");
}

Day UserTimeline::first_day() const {
    if (posts.empty()) throw ValidationError("empty timeline for user " + user_id);
    return posts.front().day();
}

Day UserTimeline::last_day() const {
    if (posts.empty()) throw ValidationError("empty timeline for user " + user_id);
    return posts.back().day();
}

int UserTimeline::span_days() const { return static_cast<int>(last_day() - first_day()) + 1; }

namespace {

Post post_from_json(const json& j, long line) {
    if (!j.is_object()) throw ParseError("post entry is not an object", line);
    Post p;
    try {
        p.ts = parse_timestamp(j.at("ts").get<std::string>());
        p.text = j.at("text").get<std::string>();
        p.retweet = j.value("retweet", false);
        p.reply = j.value("reply", false);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad post record: ") + e.what(), line);
    }
    return p;
}

json post_to_json(const Post& p) {
    return json{{"ts", format_timestamp(p.ts)},
                {"text", p.text},
                {"retweet", p.retweet},
                {"reply", p.reply}};
}

}  // namespace

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file: " + path);

    Corpus corpus;
    corpus.name = path;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        UserTimeline tl;
        try {
            tl.user_id = j.at("user_id").get<std::string>();
            tl.label = label_from_name(j.at("label").get<std::string>());
            for (const auto& pj : j.at("posts")) tl.posts.push_back(post_from_json(pj, line_no));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad user record: ") + e.what(), line_no);
        }
        if (!seen_ids.insert(tl.user_id).second)
            throw ValidationError("duplicate user '" + tl.user_id + "' at line " +
                                  std::to_string(line_no));
        for (const auto& p : tl.posts)
            if (p.text.empty()) throw ParseError("empty raw post text for user " + tl.user_id,
                                                 line_no);
        std::stable_sort(tl.posts.begin(), tl.posts.end(),
                         [](const Post& a, const Post& b) { return a.ts < b.ts; });
        // Preprocessed view, present when the file came out of the
        // preprocess stage.
        if (j.contains("proper_posts")) {
            try {
                for (const auto& pj : j.at("proper_posts"))
                    tl.proper_posts.push_back(post_from_json(pj, line_no));
            } catch (const json::exception& e) {
                throw ParseError(std::string("bad proper_posts record: ") + e.what(), line_no);
            }
            std::stable_sort(tl.proper_posts.begin(), tl.proper_posts.end(),
                             [](const Post& a, const Post& b) { return a.ts < b.ts; });
        }
        corpus.users.push_back(std::move(tl));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write corpus file: " + path);
    for (const auto& user : corpus.users) {
        json j{{"user_id", user.user_id}, {"label", label_name(user.label)}};
        json posts = json::array();
        for (const auto& p : user.posts) posts.push_back(post_to_json(p));
        j["posts"] = std::move(posts);
        if (!user.proper_posts.empty()) {
            json proper = json::array();
            for (const auto& p : user.proper_posts) proper.push_back(post_to_json(p));
            j["proper_posts"] = std::move(proper);
        }
        out << j.dump() << '\n';
    }
}

bool default_non_english(std::string_view text) {
    // Decode UTF-8 codepoints; count ASCII letters vs. everything non-ASCII.
    long ascii_alpha = 0;
    long non_ascii = 0;
    for (size_t i = 0; i < text.size();) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) ++ascii_alpha;
            ++i;
        } else {
            ++non_ascii;
            if ((c >> 5) == 0x6) i += 2;
            else if ((c >> 4) == 0xE) i += 3;
            else if ((c >> 3) == 0x1E) i += 4;
            else ++i;  // invalid byte, count and skip
        }
    }
    const long total = ascii_alpha + non_ascii;
    if (total == 0) return false;
    return static_cast<double>(non_ascii) / static_cast<double>(total) > 0.5;
}

Corpus filter_users(const Corpus& corpus, int min_posts, int min_days,
                    double max_non_english_ratio, const NonEnglishPredicate& non_english) {
    if (min_posts < 0 || min_days < 0 || max_non_english_ratio < 0)
        throw ValidationError("filter thresholds must be non-negative");
    Corpus out;
    out.name = corpus.name;
    out.metadata = corpus.metadata;
    for (const auto& user : corpus.users) {
        if (static_cast<int>(user.posts.size()) < min_posts) continue;
        if (user.posts.empty() || user.span_days() < min_days) continue;
        long foreign = 0;
        for (const auto& p : user.posts)
            if (non_english(p.text)) ++foreign;
        const double ratio = static_cast<double>(foreign) / static_cast<double>(user.posts.size());
        if (ratio > max_non_english_ratio) continue;
        out.users.push_back(user);
    }
    return out;
}

void SynthSpec::validate() const {
    if (n_depressed < 1 || n_control < 1) throw ValidationError("synth: user counts must be >= 1");
    if (history_days < 14) throw ValidationError("synth: history_days must be >= 14");
    if (history_days < 30)
        throw ValidationError(
            "synth: history_days must be >= 30 so generated users pass the 30-day "
            "inclusion filter; raise history_days");
    for (const SynthClassParams* cp : {&depressed, &control}) {
        if (cp->silence_prob < 0 || cp->silence_prob > 1)
            throw ValidationError("synth: silence_prob must be in [0,1]");
        if (cp->daily_post_rate_mean < 0)
            throw ValidationError("synth: daily_post_rate_mean must be >= 0");
        for (double p : cp->symptom_inject_prob)
            if (p < 0 || p > 1)
                throw ValidationError("synth: symptom_inject_prob must be in [0,1]");
        const double expected_posts =
            history_days * (1.0 - cp->silence_prob) * std::max(cp->daily_post_rate_mean, 1.0);
        if (expected_posts < 50.0)
            throw ValidationError(
                "synth: expected posts per user below the 50-post inclusion filter; raise "
                "daily_post_rate_mean, lower silence_prob or extend history_days");
    }
    if (recurrence_cycle_days < 0)
        throw ValidationError("synth: recurrence_cycle_days must be >= 0");
}

std::string synth_spec_json(const SynthSpec& spec) {
    auto class_json = [](const SynthClassParams& c) {
        return json{{"daily_post_rate_mean", c.daily_post_rate_mean},
                    {"silence_prob", c.silence_prob},
                    {"symptom_inject_prob", c.symptom_inject_prob}};
    };
    json j{{"n_depressed", spec.n_depressed},
           {"n_control", spec.n_control},
           {"history_days", spec.history_days},
           {"depressed", class_json(spec.depressed)},
           {"control", class_json(spec.control)},
           {"recurrence_cycle_days", spec.recurrence_cycle_days},
           {"seed", spec.seed}};
    return j.dump();
}

namespace {

// First generated post lands on this day so dates stay in a readable range.
constexpr Day kSynthEpochDay = 18262;  // 2020-01-01

UserTimeline synth_user(const SynthSpec& spec, Label label, int index, std::uint64_t user_seed) {
    const SynthClassParams& cls = label == Label::Depressed ? spec.depressed : spec.control;
    const auto& filler = detail::synth_filler_sentences();
    const Lexicon& lexicon = default_lexicon();
    Rng rng(user_seed);

    UserTimeline tl;
    tl.user_id = std::string(label == Label::Depressed ? "dep" : "ctl") + "-" +
                 std::to_string(index);
    tl.label = label;

    auto in_depressive_phase = [&](int day_offset) {
        if (spec.recurrence_cycle_days <= 0) return true;
        return (day_offset / spec.recurrence_cycle_days) % 2 == 0;
    };

    auto make_post = [&](int day_offset) {
        Post p;
        p.ts = (static_cast<UnixTime>(kSynthEpochDay) + day_offset) * 86400 +
               static_cast<UnixTime>(rng.below(86400));
        p.text = filler[rng.below(filler.size())];
        if (in_depressive_phase(day_offset)) {
            for (int s = 0; s < kSynthSymptoms; ++s) {
                if (cls.symptom_inject_prob[static_cast<size_t>(s)] > 0 &&
                    rng.bernoulli(cls.symptom_inject_prob[static_cast<size_t>(s)])) {
                    const auto& phrases = lexicon[static_cast<size_t>(s)];
                    p.text += ' ';
                    p.text += phrases[rng.below(phrases.size())];
                }
            }
        }
        return p;
    };

    for (int d = 0; d < spec.history_days; ++d) {
        // Endpoints forced active so the timeline spans the full history.
        const bool endpoint = d == 0 || d == spec.history_days - 1;
        if (!endpoint && rng.bernoulli(cls.silence_prob)) continue;
        int n = rng.poisson(cls.daily_post_rate_mean);
        if (n < 1) n = 1;
        for (int k = 0; k < n; ++k) tl.posts.push_back(make_post(d));
    }
    // Top up rare shortfalls so the 50-post filter always passes.
    while (tl.posts.size() < 50) {
        tl.posts.push_back(make_post(static_cast<int>(rng.below(spec.history_days))));
    }
    std::stable_sort(tl.posts.begin(), tl.posts.end(),
                     [](const Post& a, const Post& b) { return a.ts < b.ts; });
    return tl;
}

}  // namespace

Corpus synthesize(const SynthSpec& spec) {
    spec.validate();
    Corpus corpus;
    corpus.name = "synthetic";
    corpus.metadata = synth_spec_json(spec);
    corpus.users.reserve(static_cast<size_t>(spec.n_depressed + spec.n_control));
    for (int i = 0; i < spec.n_depressed; ++i)
        corpus.users.push_back(
            synth_user(spec, Label::Depressed, i, mix_seed(spec.seed, static_cast<std::uint64_t>(i))));
    for (int i = 0; i < spec.n_control; ++i)
        corpus.users.push_back(synth_user(
            spec, Label::Control, i,
            mix_seed(spec.seed, 0x10000000ULL + static_cast<std::uint64_t>(i))));
    return corpus;
}

}  // namespace tdm
