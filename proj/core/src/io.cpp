#include "finder/io.hpp"

#include <fstream>
#include <sstream>

#include "finder/errors.hpp"

namespace finder {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return std::move(buf).str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    const std::filesystem::path partial = path.string() + ".partial";
    {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + partial.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + partial.string());
    }
    std::filesystem::rename(partial, path, ec);
    if (ec) {
        throw IoError("rename " + partial.string() + " -> " + path.string() +
                      ": " + ec.message());
    }
}

}  // namespace finder
