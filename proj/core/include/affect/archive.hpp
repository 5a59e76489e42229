#pragma once

#include <string>
#include <utility>
#include <vector>

#include "affect/graph.hpp"
#include "affect/text.hpp"

namespace affect {

// Container for model-like artifacts: a line-based text header (kind,
// key/value metadata, optional vocabulary, tensor manifest) followed by the
// tensor payloads as little-endian 64-bit floats in manifest order. Doubles
// round-trip bitwise, so saving and reloading is lossless.
struct Archive {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;
  bool has_vocab = false;
  Vocabulary vocab;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const std::string& meta_value(const std::string& key) const;
  const Tensor& tensor(const std::string& name) const;
};

void save_archive(const Archive& archive, const std::string& path);

// Validates structure, shapes against payload size, and entry finiteness.
// `expected_kind` guards against loading the wrong artifact type; empty
// accepts any kind.
Archive load_archive(const std::string& path,
                     const std::string& expected_kind = "");

}  // namespace affect
