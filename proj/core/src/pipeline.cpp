#include "tdm/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "tdm/error.hpp"

namespace tdm {

namespace {

// Index-sharded parallel loop; results must be written to per-index slots so
// the outcome is independent of the worker count.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const int count = std::min<int>(workers, static_cast<int>(n));
    pool.reserve(static_cast<size_t>(count));
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

PreparedCorpus prepare_corpus(const Corpus& corpus, const Detector& detector,
                              const Encoder& encoder, int workers) {
    PreparedCorpus prepared;
    prepared.dim = encoder.dim;
    prepared.users.resize(corpus.users.size());
    parallel_for(corpus.users.size(), workers, [&](size_t i) {
        const UserTimeline& tl = corpus.users[i];
        PreparedUser& user = prepared.users[i];
        user.user_id = tl.user_id;
        user.label = tl.label;
        user.days = build_day_index(tl, detector);
        for (const auto& [day, texts] : user.days.proper_texts)
            user.day_embeddings.emplace(day, dlsea(texts, encoder));
        user.atea = atea(tl, encoder);
    });
    return prepared;
}

std::vector<UserFeatures> features_for(const PreparedCorpus& prepared, ScoringMode mode,
                                       int slide_days, DenominatorPolicy denom) {
    std::vector<UserFeatures> out;
    out.reserve(prepared.users.size());
    for (const auto& user : prepared.users) {
        UserFeatures f;
        f.user_id = user.user_id;
        f.label = user.label;
        f.atea = user.atea;
        const std::vector<Episode> episodes = build_episodes(user.days, slide_days);
        f.episodes.reserve(episodes.size());
        for (const auto& e : episodes) {
            EpisodeFeatures ef = episode_features(e, mode, denom);
            std::vector<Embedding> day_embs;
            for (Day d = e.start_day; d <= e.end_day; ++d) {
                const auto it = user.day_embeddings.find(d);
                if (it != user.day_embeddings.end()) day_embs.push_back(it->second);
            }
            ef.embedding = elsea(day_embs, prepared.dim);
            f.episodes.push_back(std::move(ef));
        }
        f.tp = temporal_profile(f.episodes, mode.sensitivity);
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<UserFeatures> extract_features(const Corpus& corpus, const Detector& detector,
                                           const Encoder& encoder, ScoringMode mode,
                                           int slide_days, int workers, DenominatorPolicy denom) {
    return features_for(prepare_corpus(corpus, detector, encoder, workers), mode, slide_days,
                        denom);
}

std::string features_csv(std::span<const UserFeatures> users, ScoringMode mode, int slide_days) {
    std::string out(kFeatureCsvHeader);
    out += '\n';
    char buf[160];
    const std::string mode_str = mode.to_string();
    for (const auto& user : users) {
        for (const auto& e : user.episodes) {
            std::snprintf(buf, sizeof(buf), ",%d,%d,%d,%s,%.6f,%s,%d,%.6f,%.6f",
                          e.total_days, e.active_days, e.dep_score, level_name(e.level),
                          e.absence_ratio, mode_str.c_str(), slide_days, user.tp.is,
                          user.tp.drfs);
            out += user.user_id;
            out += ',';
            out += label_name(user.label);
            out += ',';
            out += format_day(e.start_day);
            out += buf;
            out += '\n';
        }
    }
    return out;
}

void write_features_csv(const std::string& path, std::span<const UserFeatures> users,
                        ScoringMode mode, int slide_days) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write features CSV: " + path);
    out << features_csv(users, mode, slide_days);
}

}  // namespace tdm
