#ifndef PCM_CLI_CHECKSUM_HPP_
#define PCM_CLI_CHECKSUM_HPP_

#include <filesystem>
#include <string>

namespace pcm::cli {

// Lower-case hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace pcm::cli

#endif  // PCM_CLI_CHECKSUM_HPP_
