#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cobweb/concept_tree.hpp"

namespace cobweb {

inline constexpr const char* kModelFormat = "cobweb4l-model";
inline constexpr int kModelVersion = 1;

// Canonical serialization: fixed key order, nodes in pre-order, tallies
// sorted by word id, floats rendered with 17 significant digits. Two trees
// with the same content produce the same bytes, and save(load(save(t)))
// reproduces them exactly.
std::string canonical_bytes(const ConceptTree& tree);

// 64-bit FNV-1a over canonical_bytes; handy for read-only assertions.
std::uint64_t model_hash(const ConceptTree& tree);

// Writes the model atomically (temp file + rename). Refreshes the tree's
// derived aggregates first so the in-memory tree and any future load of the
// file compute from identical state.
void save(ConceptTree& tree, const std::filesystem::path& path);

// Reads a model back, validating structure (ids resolve, parents and
// children agree, counts conserve) before returning the tree.
ConceptTree load(const std::filesystem::path& path);

std::string format_double(double value);

}  // namespace cobweb
