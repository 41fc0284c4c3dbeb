#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace evspde {

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_double(double value);

/// Row-oriented CSV text builder. Cells are appended left to right; rows end
/// with '\n'.
class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header);

    CsvBuilder& cell(double value);
    CsvBuilder& cell(long long value);
    CsvBuilder& cell(int value) { return cell(static_cast<long long>(value)); }
    CsvBuilder& cell(std::string_view text);
    CsvBuilder& end_row();

    const std::string& str() const noexcept { return text_; }
    void save(const std::filesystem::path& path) const;

private:
    void separator();

    std::string text_;
    bool row_open_ = false;
};

/// Writes `content` to `path`, creating parent directories. Throws
/// std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

} // namespace evspde
