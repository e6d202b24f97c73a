#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tqe/errors.hpp"

namespace tqe {

constexpr std::uint32_t kCheckpointVersion = 1;

// Architecture-agnostic container for persisted models: a metadata section
// (key=value lines) plus named flat arrays of 64-bit reals.
struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string kind;  // "mono" | "siamese"
    std::map<std::string, std::string> metadata;
    std::vector<std::pair<std::string, std::vector<double>>> arrays;

    const std::vector<double>& array(const std::string& name) const;
    bool has_array(const std::string& name) const;
    std::string meta(const std::string& key) const;
};

// File layout: magic "QEF1", u32 metadata length + UTF-8 metadata text,
// u32 array count, then per array u32 name length, name bytes, u64 element
// count, little-endian f64 payload; trailing CRC32 of everything after the
// magic. Round-trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tqe
