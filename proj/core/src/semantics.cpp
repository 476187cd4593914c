#include "tdm/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tdm/error.hpp"
#include "tdm/rng.hpp"

namespace tdm {

namespace {

std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void add_token_direction(std::vector<double>& acc, std::string_view token, std::uint64_t seed) {
    std::uint64_t state = seed ^ fnv1a64(token);
    splitmix64(state);
    std::vector<double> dir(acc.size());
    double norm_sq = 0.0;
    for (double& v : dir) {
        // Uniform in [-1, 1); direction quality is all that matters here.
        v = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
        norm_sq += v * v;
    }
    if (norm_sq <= 0.0) return;
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += dir[i] * inv;
}

}  // namespace

Encoder reference_encoder(int dim, std::uint64_t seed) {
    if (dim < 8) throw ValidationError("reference encoder dimension must be >= 8");
    Encoder enc;
    enc.name = "reference:" + std::to_string(dim) + ":" + std::to_string(seed);
    enc.dim = dim;
    enc.encode = [dim, seed](std::string_view text) {
        std::vector<double> acc(static_cast<size_t>(dim), 0.0);
        size_t i = 0;
        bool any = false;
        while (i < text.size()) {
            while (i < text.size() && text[i] == ' ') ++i;
            size_t j = i;
            while (j < text.size() && text[j] != ' ') ++j;
            if (j > i) {
                add_token_direction(acc, text.substr(i, j - i), seed);
                any = true;
            }
            i = j;
        }
        Embedding out(static_cast<size_t>(dim), 0.0f);
        if (!any) return out;
        double norm_sq = 0.0;
        for (double v : acc) norm_sq += v * v;
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (size_t k = 0; k < acc.size(); ++k)
                out[k] = static_cast<float>(acc[k] * inv);
        }
        return out;
    };
    return enc;
}

Embedding mean_embedding(std::span<const Embedding> items, int dim) {
    Embedding out(static_cast<size_t>(dim), 0.0f);
    if (items.empty()) return out;
    std::vector<double> acc(static_cast<size_t>(dim), 0.0);
    for (const auto& e : items) {
        if (static_cast<int>(e.size()) != dim)
            throw ValidationError("embedding dimension mismatch in average");
        for (size_t i = 0; i < e.size(); ++i) acc[i] += e[i];
    }
    const double inv = 1.0 / static_cast<double>(items.size());
    for (size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] * inv);
    return out;
}

Embedding dlsea(std::span<const std::string> day_posts, const Encoder& encoder) {
    std::vector<Embedding> embs;
    embs.reserve(day_posts.size());
    for (const auto& text : day_posts) embs.push_back(encoder.encode(text));
    return mean_embedding(embs, encoder.dim);
}

Embedding elsea(std::span<const Embedding> day_dlseas, int dim) {
    return mean_embedding(day_dlseas, dim);
}

Embedding atea(const UserTimeline& timeline, const Encoder& encoder) {
    std::vector<Embedding> embs;
    embs.reserve(timeline.proper_posts.size());
    for (const auto& post : timeline.proper_posts) embs.push_back(encoder.encode(post.text));
    return mean_embedding(embs, encoder.dim);
}

std::uint64_t EmbeddingCache::key_of(std::string_view encoder_name, std::string_view text) {
    std::uint64_t h = fnv1a64(encoder_name);
    h = fnv1a64(std::string_view("\0", 1), h);
    return fnv1a64(text, h);
}

const Embedding* EmbeddingCache::find(std::string_view encoder_name,
                                      std::string_view text) const {
    const auto it = entries_.find(key_of(encoder_name, text));
    return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingCache::put(std::string_view encoder_name, std::string_view text, Embedding value) {
    if (static_cast<int>(value.size()) != dim_)
        throw ValidationError("embedding cache dimension mismatch");
    entries_[key_of(encoder_name, text)] = std::move(value);
}

namespace {
constexpr char kCacheMagic[4] = {'T', 'D', 'E', 'C'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_le(std::ofstream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}
}  // namespace

void EmbeddingCache::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write embedding cache: " + path);
    out.write(kCacheMagic, 4);
    write_le<std::uint32_t>(out, kCacheVersion);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    // Deterministic order on disk.
    std::vector<std::uint64_t> keys;
    keys.reserve(entries_.size());
    for (const auto& [k, _] : entries_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const auto k : keys) {
        write_le<std::uint64_t>(out, k);
        for (float f : entries_.at(k)) write_le<float>(out, f);
    }
}

EmbeddingCache EmbeddingCache::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open embedding cache: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCacheMagic, 4) != 0)
        throw ParseError("not an embedding cache file: " + path);
    const auto version = read_le<std::uint32_t>(in);
    if (version != kCacheVersion)
        throw ParseError("unsupported embedding cache version in " + path);
    const auto dim = read_le<std::uint32_t>(in);
    EmbeddingCache cache(static_cast<int>(dim));
    while (true) {
        const auto key = read_le<std::uint64_t>(in);
        if (!in) break;
        Embedding e(dim);
        for (auto& f : e) f = read_le<float>(in);
        if (!in) throw ParseError("truncated embedding cache: " + path);
        cache.entries_[key] = std::move(e);
    }
    return cache;
}

Encoder EmbeddingCache::wrap(const Encoder& inner) {
    if (inner.dim != dim_) throw ValidationError("embedding cache dimension mismatch");
    Encoder enc;
    enc.name = inner.name;
    enc.dim = inner.dim;
    enc.encode = [this, inner](std::string_view text) {
        if (const Embedding* hit = find(inner.name, text)) return *hit;
        Embedding e = inner.encode(text);
        put(inner.name, text, e);
        return e;
    };
    return enc;
}

}  // namespace tdm
