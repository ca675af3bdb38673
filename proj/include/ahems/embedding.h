// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ahems/fixed_point.h"
#include "ahems/paillier.h"

namespace ahems {

struct Block {
  std::string label;
  std::size_t offset = 0;
  std::size_t length = 0;

  friend bool operator==(const Block&, const Block&) = default;
};

// Contiguous, non-overlapping labeled blocks covering [0, total_dim).
class BlockSchema {
 public:
  BlockSchema() = default;

  // Throws ValidationError when the blocks do not tile [0, total_dim) in
  // order, a block is empty, or labels repeat.
  static BlockSchema from_blocks(std::vector<Block> blocks);

  // Equal partition; the first (d % k) blocks get one extra coordinate.
  // k = 4 without labels uses {rhythm, melody, harmony, timbre}; other k
  // use block0..block{k-1}.
  static BlockSchema equal_partition(std::size_t total_dim, std::size_t k);
  static BlockSchema equal_partition(std::size_t total_dim,
                                     const std::vector<std::string>& labels);

  std::size_t total_dim() const { return total_dim_; }
  std::size_t size() const { return blocks_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(std::size_t i) const { return blocks_.at(i); }

  // Throws ValidationError on an unknown label.
  std::size_t index_of(std::string_view label) const;

  // Canonical text form, e.g. "rhythm:0+32,melody:32+32".
  std::string id() const;

  template <typename T>
  std::span<const T> project(std::span<const T> values, std::size_t i) const {
    const Block& b = blocks_.at(i);
    return values.subspan(b.offset, b.length);
  }

  friend bool operator==(const BlockSchema&, const BlockSchema&) = default;

 private:
  std::vector<Block> blocks_;
  std::size_t total_dim_ = 0;
};

std::vector<std::string> default_labels(std::size_t k);

struct EmbeddingVector {
  std::string id;
  std::optional<std::string> creator;
  std::vector<double> values;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

struct EncryptedVector {
  std::string id;
  std::optional<std::string> creator;
  std::vector<ahe::Ciphertext> cells;
  ahe::KeyId key_id;
};

// One weight per schema block.
struct WeightVector {
  std::vector<double> weights;
};

struct EmbeddingSet {
  BlockSchema schema;
  std::vector<EmbeddingVector> vectors;
};

struct EncryptedSet {
  BlockSchema schema;
  codec::ScaleConfig scale;
  ahe::KeyId key_id;
  std::vector<EncryptedVector> vectors;
};

void l2_normalize(EmbeddingVector& v);

}  // namespace ahems
