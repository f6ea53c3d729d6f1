#include "berngraph/io_util.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "berngraph/errors.hpp"

namespace berngraph {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    static std::atomic<uint64_t> counter{0};
    const auto tmp = path.parent_path() /
                     fmt::format(".{}.tmp{}", path.filename().string(), counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", tmp.string()));
        out << content;
        if (!out) throw Error(ErrorCode::io, fmt::format("write failed for '{}'", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, fmt::format("cannot open '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace berngraph
