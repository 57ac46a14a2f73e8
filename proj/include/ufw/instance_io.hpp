#pragma once

#include <string>
#include <variant>

#include "ufw/synth.hpp"

namespace ufw {

using Instance = std::variant<TrendInstance, MatrixInstance>;

/// Self-describing single-document JSON instance format: a plain-text header
/// (format tag, version, problem kind, generator spec with its seed) plus
/// float arrays embedded as base64 little-endian 64-bit payloads. Load
/// followed by serialize reproduces the bytes exactly.
std::string serialize_instance(const Instance& inst);
Instance parse_instance(const std::string& text);

void save_instance(const std::string& path, const Instance& inst);
Instance load_instance(const std::string& path);

/// Hex digest of the serialized document; used as the cache key for
/// per-instance reference solutions.
std::string instance_content_hash(const Instance& inst);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::string base64_decode(const std::string& text);

}  // namespace ufw
