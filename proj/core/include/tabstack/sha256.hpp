#pragma once

#include <string>

namespace tabstack {

// Hex digest; used for artifact hashes in the run manifest.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

}  // namespace tabstack
