// Copyright 2026 The ahems Authors
// SPDX-License-Identifier: Apache-2.0

#include "ahems/embedding.h"

#include <cmath>
#include <set>

#include "ahems/error.h"

namespace ahems {

std::vector<std::string> default_labels(std::size_t k) {
  if (k == 4) return {"rhythm", "melody", "harmony", "timbre"};
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back("block" + std::to_string(i));
  return out;
}

BlockSchema BlockSchema::from_blocks(std::vector<Block> blocks) {
  if (blocks.empty()) throw ValidationError("schema needs at least one block");
  std::set<std::string> seen;
  std::size_t next = 0;
  for (const Block& b : blocks) {
    if (b.label.empty()) throw ValidationError("block label must not be empty");
    if (!seen.insert(b.label).second) {
      throw ValidationError("duplicate block label '" + b.label + "'");
    }
    if (b.length == 0) throw ValidationError("block '" + b.label + "' is empty");
    if (b.offset != next) {
      throw ValidationError("block '" + b.label + "' starts at " +
                            std::to_string(b.offset) + ", expected " +
                            std::to_string(next));
    }
    next += b.length;
  }
  BlockSchema s;
  s.blocks_ = std::move(blocks);
  s.total_dim_ = next;
  return s;
}

BlockSchema BlockSchema::equal_partition(std::size_t total_dim, std::size_t k) {
  return equal_partition(total_dim, default_labels(k));
}

BlockSchema BlockSchema::equal_partition(
    std::size_t total_dim, const std::vector<std::string>& labels) {
  const std::size_t k = labels.size();
  if (k == 0 || k > total_dim) {
    throw ValidationError("cannot split dimension " + std::to_string(total_dim) +
                          " into " + std::to_string(k) + " blocks");
  }
  std::vector<Block> blocks;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t len = total_dim / k + (i < total_dim % k ? 1 : 0);
    blocks.push_back(Block{labels[i], offset, len});
    offset += len;
  }
  return from_blocks(std::move(blocks));
}

std::size_t BlockSchema::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].label == label) return i;
  }
  throw ValidationError("unknown block label '" + std::string(label) + "'");
}

std::string BlockSchema::id() const {
  std::string out;
  for (const Block& b : blocks_) {
    if (!out.empty()) out += ',';
    out += b.label + ':' + std::to_string(b.offset) + '+' + std::to_string(b.length);
  }
  return out;
}

void l2_normalize(EmbeddingVector& v) {
  double sum = 0.0;
  for (double x : v.values) sum += x * x;
  if (sum == 0.0) return;
  const double inv = 1.0 / std::sqrt(sum);
  for (double& x : v.values) x *= inv;
}

}  // namespace ahems
