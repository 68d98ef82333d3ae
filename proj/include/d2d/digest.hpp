#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace d2d {

// SHA-256 hex digest of a byte string / file. Used by run manifests to pin
// inputs and outputs for reproducibility checks.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::string& path);

}  // namespace d2d
