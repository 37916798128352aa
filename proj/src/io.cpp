#include "dnsxray/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dnsxray/error.hpp"

namespace dnsxray {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileUnreadable", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error("FileUnreadable", path.string());
    return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("FileUnwritable", path.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("FileUnwritable", path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("FileUnwritable", path.string() + ": " + ec.message());
}

std::string format_double(double v) {
    if (v == 0.0) return "0"; // folds -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw Error("ParseError", "not a number: '" + std::string(s) + "'");
    return v;
}

} // namespace dnsxray
