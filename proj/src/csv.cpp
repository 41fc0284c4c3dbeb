#include "evspde/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace evspde {

std::string format_double(double value)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

CsvBuilder::CsvBuilder(const std::vector<std::string>& header)
{
    for (const auto& h : header) {
        cell(h);
    }
    end_row();
}

void CsvBuilder::separator()
{
    if (row_open_) {
        text_ += ',';
    }
    row_open_ = true;
}

CsvBuilder& CsvBuilder::cell(double value)
{
    separator();
    text_ += format_double(value);
    return *this;
}

CsvBuilder& CsvBuilder::cell(long long value)
{
    separator();
    text_ += std::to_string(value);
    return *this;
}

CsvBuilder& CsvBuilder::cell(std::string_view text)
{
    separator();
    text_ += text;
    return *this;
}

CsvBuilder& CsvBuilder::end_row()
{
    text_ += '\n';
    row_open_ = false;
    return *this;
}

void CsvBuilder::save(const std::filesystem::path& path) const { write_text_file(path, text_); }

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace evspde
