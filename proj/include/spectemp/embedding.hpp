#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spectemp/timeline.hpp"

namespace spectemp {

// Seam for the frame/question similarity signal. Real CLIP lives behind
// this interface; the default is a deterministic synthetic provider.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<float> embed_text(const std::string& q) const = 0;
  virtual std::vector<float> embed_frame(const FrameRef& f) const = 0;
  virtual std::size_t dim() const = 0;
};

// Expands a seeded hash of the key into d pseudo-random coordinates in
// [-1, 1], then L2-normalizes (scalar path, so the vector is identical
// across processes and platforms for a fixed seed).
std::vector<float> hash_embed(const std::string& key, std::size_t d, std::uint64_t seed);

// Default provider: question embeddings come from hash_embed; frame
// embeddings are the frame's own stored features.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  HashEmbeddingProvider(std::size_t d, std::uint64_t seed) : d_(d), seed_(seed) {}
  std::vector<float> embed_text(const std::string& q) const override {
    return hash_embed("q:" + q, d_, seed_);
  }
  std::vector<float> embed_frame(const FrameRef& f) const override { return f.features; }
  std::size_t dim() const override { return d_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t d_;
  std::uint64_t seed_;
};

}  // namespace spectemp
