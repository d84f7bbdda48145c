#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "evp/errors.hpp"

namespace evp {

/// Floats rendered with 17 significant digits ('.' decimal point); enough to
/// round-trip any double bit-exactly.
std::string format_double(double v);

/// Writes content to path atomically (temp file + rename).
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// CSV buffer: ',' separator, header row, 17-significant-digit floats.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(const std::vector<std::string>& cells);
    std::string cell(double v) const { return format_double(v); }
    std::string cell(long long v) const { return std::to_string(v); }
    std::string cell(const std::string& v) const { return v; }

    template <typename... Ts>
    void row_of(const Ts&... vs) {
        row({cell(vs)...});
    }

    const std::string& content() const { return buf_; }
    void save(const std::filesystem::path& path) const { atomic_write(path, buf_); }

private:
    std::string buf_;
    std::size_t width_;
};

/// FNV-1a 64-bit hash, hex-encoded; used to key manifests to their configs.
std::string fnv1a64_hex(const std::string& data);

} // namespace evp
