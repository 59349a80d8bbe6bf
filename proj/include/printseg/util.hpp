#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace printseg {

enum class ErrorCategory {
    FileNotFound,
    Parse,
    Config,
    Io,
    Validation,
};

// Domain error carrying a coarse category so the CLI can map failures to
// stable exit messages.
class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

const char* error_category_name(ErrorCategory category);

// FNV-1a, 64-bit. Used for content digests, seed derivation and texture
// lattice hashing; chosen over a cryptographic hash because every consumer
// here needs platform-stable bits, not collision resistance.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t seed = kFnvOffset) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = seed;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= kFnvPrime;
    }
    return hash;
}

inline std::uint64_t fnv1a64(std::string_view text) {
    return fnv1a64(text.data(), text.size());
}

// Mixes a list of 64-bit words into one seed (order sensitive).
std::uint64_t hash_combine(std::initializer_list<std::uint64_t> words);

std::string to_hex(std::uint64_t value);
std::uint64_t parse_hex64(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
std::string read_binary_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory followed by a rename, so an
// interrupted run never leaves a truncated output behind.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string lowercase(std::string_view text);
std::string trim(std::string_view text);

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();
void set_log_level(LogLevel level);
// Reads PRINTSEG_LOG (quiet|warn|info|debug or 0..3); keeps the current
// level when the variable is unset or unrecognized.
void init_log_level_from_env();

void log_warn(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace printseg
