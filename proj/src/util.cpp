#include "printseg/util.hpp"

#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

namespace printseg {

namespace {

std::atomic<LogLevel> g_log_level{LogLevel::Warn};
std::mutex g_log_mutex;

void log_line(const char* tag, const std::string& message) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << "printseg " << tag << ": " << message << "\n";
}

}  // namespace

const char* error_category_name(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::FileNotFound: return "file-not-found";
        case ErrorCategory::Parse: return "parse";
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Validation: return "validation";
    }
    return "unknown";
}

std::uint64_t hash_combine(std::initializer_list<std::uint64_t> words) {
    std::uint64_t hash = kFnvOffset;
    for (std::uint64_t word : words) {
        for (int byte = 0; byte < 8; ++byte) {
            hash ^= (word >> (8 * byte)) & 0xffu;
            hash *= kFnvPrime;
        }
    }
    return hash;
}

std::string to_hex(std::uint64_t value) {
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(value));
    return buffer;
}

std::uint64_t parse_hex64(std::string_view text) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, 16);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorCategory::Parse, "invalid hex value: " + std::string(text));
    }
    return value;
}

namespace {

std::string read_file_impl(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream stream(path, mode);
    if (!stream) {
        throw Error(ErrorCategory::FileNotFound, "cannot open file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    if (stream.bad()) {
        throw Error(ErrorCategory::Io, "failed reading file: " + path.string());
    }
    return buffer.str();
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    return read_file_impl(path, std::ios::in);
}

std::string read_binary_file(const std::filesystem::path& path) {
    return read_file_impl(path, std::ios::in | std::ios::binary);
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
    }
    static std::atomic<std::uint64_t> counter{0};
    std::filesystem::path tmp = path;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
        if (!stream) {
            throw Error(ErrorCategory::Io, "cannot create file: " + tmp.string());
        }
        stream.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!stream) {
            std::filesystem::remove(tmp);
            throw Error(ErrorCategory::Io, "failed writing file: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCategory::Io,
                    "failed moving " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string lowercase(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

LogLevel log_level() { return g_log_level.load(); }

void set_log_level(LogLevel level) { g_log_level.store(level); }

void init_log_level_from_env() {
    const char* env = std::getenv("PRINTSEG_LOG");
    if (!env) return;
    std::string value = lowercase(trim(env));
    if (value == "quiet" || value == "0") set_log_level(LogLevel::Quiet);
    else if (value == "warn" || value == "1") set_log_level(LogLevel::Warn);
    else if (value == "info" || value == "2") set_log_level(LogLevel::Info);
    else if (value == "debug" || value == "3") set_log_level(LogLevel::Debug);
}

void log_warn(const std::string& message) {
    if (log_level() >= LogLevel::Warn) log_line("warning", message);
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::Info) log_line("info", message);
}

void log_debug(const std::string& message) {
    if (log_level() >= LogLevel::Debug) log_line("debug", message);
}

}  // namespace printseg
