#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdm/corpus.hpp"

namespace tdm {

using Embedding = std::vector<float>;

// Sentence encoder handle. encode must be deterministic for a fixed
// configuration and map empty text to the zero vector.
struct Encoder {
    std::string name;
    int dim = 0;
    std::function<Embedding(std::string_view)> encode;
};

// Deterministic hashed bag-of-words stand-in for an external sentence
// encoder: each token hashes to a unit pseudo-random direction; the text
// embedding is the L2-normalized token sum.
Encoder reference_encoder(int dim, std::uint64_t seed);

// Arithmetic mean; zero vector when the span is empty.
Embedding mean_embedding(std::span<const Embedding> items, int dim);

// Day-level average over one day's proper posts.
Embedding dlsea(std::span<const std::string> day_posts, const Encoder& encoder);

// Episode-level average over active-day DLSEAs.
Embedding elsea(std::span<const Embedding> day_dlseas, int dim);

// Whole-history average over a user's proper posts.
Embedding atea(const UserTimeline& timeline, const Encoder& encoder);

// Optional persistent cache keyed by (encoder name, text hash).
// File layout: magic "TDEC", u32 version, u32 dim, then repeated
// [u64 key, dim little-endian f32].
class EmbeddingCache {
public:
    explicit EmbeddingCache(int dim) : dim_(dim) {}

    static EmbeddingCache load(const std::string& path);
    void save(const std::string& path) const;

    const Embedding* find(std::string_view encoder_name, std::string_view text) const;
    void put(std::string_view encoder_name, std::string_view text, Embedding value);

    int dim() const { return dim_; }
    size_t size() const { return entries_.size(); }

    // Encoder that consults/fills this cache around `inner`.
    Encoder wrap(const Encoder& inner);

private:
    static std::uint64_t key_of(std::string_view encoder_name, std::string_view text);

    int dim_;
    std::unordered_map<std::uint64_t, Embedding> entries_;
};

}  // namespace tdm
