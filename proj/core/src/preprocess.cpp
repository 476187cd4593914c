#include "tdm/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tdm/error.hpp"

namespace tdm {

using nlohmann::json;

namespace {

bool is_ascii_alnum(char32_t c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool kept_punct(char32_t c) { return c == '.' || c == ',' || c == '?' || c == '!'; }

// Minimal UTF-8 decode; invalid bytes are passed through as single codepoints.
std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp = c;
        size_t len = 1;
        if ((c >> 5) == 0x6 && i + 1 < s.size()) {
            cp = (c & 0x1F);
            len = 2;
        } else if ((c >> 4) == 0xE && i + 2 < s.size()) {
            cp = (c & 0x0F);
            len = 3;
        } else if ((c >> 3) == 0x1E && i + 3 < s.size()) {
            cp = (c & 0x07);
            len = 4;
        }
        for (size_t k = 1; k < len; ++k)
            cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct Tok {
    std::string cur;
    bool hashtag = false;
    bool url = false;
};

std::vector<std::string> split_ws(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

size_t codepoint_count(std::string_view s) { return decode_utf8(s).size(); }

bool all_digit_token(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

// One-character words other than a/i/u, and digit-only tokens, are dropped.
bool droppable_short_or_digit(const std::string& tok) {
    if (all_digit_token(tok)) return true;
    if (codepoint_count(tok) == 1) return !(tok == "a" || tok == "i" || tok == "u");
    return false;
}

std::string collapse_elongation(const std::string& tok) {
    std::string out;
    out.reserve(tok.size());
    size_t i = 0;
    while (i < tok.size()) {
        const char c = tok[i];
        size_t j = i;
        while (j < tok.size() && tok[j] == c) ++j;
        const size_t run = j - i;
        if (c >= 'a' && c <= 'z' && run >= 3) {
            out.push_back(c);
        } else {
            out.append(tok, i, run);
        }
        i = j;
    }
    return out;
}

bool is_emoji(char32_t cp, const std::vector<std::pair<char32_t, char32_t>>& ranges) {
    for (const auto& [lo, hi] : ranges)
        if (cp >= lo && cp <= hi) return true;
    return false;
}

bool has_ascii_alnum(const std::string& tok) {
    for (char c : tok)
        if (is_ascii_alnum(static_cast<char32_t>(static_cast<unsigned char>(c)))) return true;
    return false;
}

bool has_non_ascii(const std::string& tok) {
    for (char c : tok)
        if (static_cast<unsigned char>(c) >= 0x80) return true;
    return false;
}

std::string filter_codepoints(const std::string& tok, auto&& keep) {
    std::string out;
    out.reserve(tok.size());
    for (char32_t cp : decode_utf8(tok))
        if (keep(cp)) encode_utf8(cp, out);
    return out;
}

}  // namespace

PreprocessResult preprocess_post(std::string_view text, bool is_retweet, bool is_reply,
                                 const PreprocessTables& tables) {
    // (1) lowercase (ASCII case fold; foreign scripts are removed later anyway)
    std::string lower(text);
    for (char& c : lower)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');

    // (2) retweets and replies; heuristics cover missing platform flags
    if (is_retweet || is_reply || lower.rfind("rt ", 0) == 0 || (!lower.empty() && lower[0] == '@'))
        return {false, "", kRuleRetweetReply};

    std::vector<std::string> raw_toks = split_ws(lower);
    std::vector<Tok> toks;
    toks.reserve(raw_toks.size());
    for (auto& t : raw_toks) {
        Tok tok;
        tok.hashtag = !t.empty() && t[0] == '#';
        tok.url = t.rfind("http", 0) == 0 || t.rfind("www.", 0) == 0;
        tok.cur = std::move(t);
        toks.push_back(std::move(tok));
    }

    // (3) one-character words (except a/i/u) and digit tokens
    std::erase_if(toks, [](const Tok& t) { return droppable_short_or_digit(t.cur); });

    // (5) contraction expansion; the lookup key is the token without leading
    // or trailing punctuation, which is re-attached around the expansion
    {
        std::vector<Tok> expanded;
        expanded.reserve(toks.size());
        for (auto& t : toks) {
            size_t b = 0;
            size_t e = t.cur.size();
            auto alnum_or_apos = [](char c) {
                return is_ascii_alnum(static_cast<char32_t>(static_cast<unsigned char>(c))) ||
                       c == '\'' || static_cast<unsigned char>(c) >= 0x80;
            };
            while (b < e && !alnum_or_apos(t.cur[b])) ++b;
            while (e > b && !alnum_or_apos(t.cur[e - 1])) --e;
            const std::string core = t.cur.substr(b, e - b);
            const auto it = tables.contractions.find(core);
            if (it == tables.contractions.end()) {
                expanded.push_back(std::move(t));
                continue;
            }
            const std::string prefix = t.cur.substr(0, b);
            const std::string suffix = t.cur.substr(e);
            std::vector<std::string> words = split_ws(it->second);
            for (size_t k = 0; k < words.size(); ++k) {
                Tok nt;
                nt.hashtag = t.hashtag;
                nt.url = t.url;
                nt.cur = words[k];
                if (k == 0) nt.cur = prefix + nt.cur;
                if (k + 1 == words.size()) nt.cur += suffix;
                expanded.push_back(std::move(nt));
            }
        }
        toks = std::move(expanded);
    }

    // (6) elongation collapse: runs of three or more identical letters
    for (auto& t : toks) t.cur = collapse_elongation(t.cur);

    // (7) self-disclosure posts
    for (const auto& t : toks)
        if (t.cur.find("diagnosed") != std::string::npos ||
            t.cur.find("diagnosis") != std::string::npos)
            return {false, "", kRuleSelfDisclosure};

    // (8) punctuation except . , ? !
    for (auto& t : toks)
        t.cur = filter_codepoints(t.cur, [](char32_t cp) {
            if (cp >= 0x80) return true;  // handled by later steps
            return is_ascii_alnum(cp) || kept_punct(cp) || cp == ' ';
        });

    // (9) URLs (flag captured before punctuation stripping)
    std::erase_if(toks, [](const Tok& t) {
        return t.url || t.cur.rfind("http", 0) == 0 || t.cur.rfind("www.", 0) == 0;
    });

    // (10) non-ASCII characters inside words
    for (auto& t : toks)
        if (has_ascii_alnum(t.cur))
            t.cur = filter_codepoints(t.cur, [](char32_t cp) { return cp < 0x80; });

    // (11) hashtag tokens (whole token, flag captured at tokenization)
    std::erase_if(toks, [](const Tok& t) { return t.hashtag; });

    // (12) emoji
    for (auto& t : toks)
        t.cur = filter_codepoints(
            t.cur, [&](char32_t cp) { return !is_emoji(cp, tables.emoji_ranges); });

    // Sweep: tokens emptied by the steps above, leftover non-ASCII tokens,
    // and tokens the short-word/digit rule would now remove (keeps the
    // pipeline idempotent after punctuation and elongation changes).
    std::erase_if(toks, [](const Tok& t) {
        return t.cur.empty() || has_non_ascii(t.cur) || droppable_short_or_digit(t.cur);
    });

    // (4) posts shorter than three word tokens
    long words = 0;
    for (const auto& t : toks)
        if (has_ascii_alnum(t.cur)) ++words;
    if (words < 3) return {false, "", kRuleMinLength};

    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out.push_back(' ');
        out += toks[i].cur;
    }
    return {true, std::move(out), ""};
}

void PreprocessReport::merge(const PreprocessReport& other) {
    input_count += other.input_count;
    kept_count += other.kept_count;
    for (const auto& [rule, n] : other.removed_by_rule) removed_by_rule[rule] += n;
}

std::string PreprocessReport::to_json() const {
    json j{{"input_count", input_count},
           {"kept_count", kept_count},
           {"removed_by_rule", removed_by_rule}};
    return j.dump(2);
}

PreprocessReport preprocess_timeline(UserTimeline& timeline, const PreprocessTables& tables) {
    PreprocessReport report;
    timeline.proper_posts.clear();
    for (const auto& post : timeline.posts) {
        ++report.input_count;
        PreprocessResult r = preprocess_post(post.text, post.retweet, post.reply, tables);
        if (r.kept) {
            ++report.kept_count;
            Post cleaned = post;
            cleaned.text = std::move(r.text);
            timeline.proper_posts.push_back(std::move(cleaned));
        } else {
            ++report.removed_by_rule[r.rule];
        }
    }
    return report;
}

PreprocessReport preprocess_corpus(Corpus& corpus, const PreprocessTables& tables) {
    PreprocessReport report;
    for (auto& user : corpus.users) report.merge(preprocess_timeline(user, tables));
    return report;
}

PreprocessTables load_tables(const std::string& contractions_path,
                             const std::string& emoji_ranges_path) {
    PreprocessTables tables;
    {
        std::ifstream in(contractions_path);
        if (!in) throw ValidationError("cannot open contraction table: " + contractions_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad contraction table: ") + e.what());
        }
        for (const auto& [key, value] : j.items())
            tables.contractions[key] = value.get<std::string>();
    }
    {
        std::ifstream in(emoji_ranges_path);
        if (!in) throw ValidationError("cannot open emoji range file: " + emoji_ranges_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad emoji range file: ") + e.what());
        }
        for (const auto& pair : j) {
            if (!pair.is_array() || pair.size() != 2)
                throw ValidationError("emoji range entries must be [lo, hi] pairs");
            tables.emoji_ranges.emplace_back(static_cast<char32_t>(pair[0].get<std::uint32_t>()),
                                             static_cast<char32_t>(pair[1].get<std::uint32_t>()));
        }
    }
    return tables;
}

}  // namespace tdm
