#include "matef/fs_util.hpp"

#include "matef/errors.hpp"

#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>

namespace matef {

namespace fs = std::filesystem;

fs::path matef_home() {
    if (const char* home = std::getenv("MATEF_HOME"); home && *home)
        return fs::path(home);
    return fs::path("matef-data");
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::StorageError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        raise(ErrorCode::StorageError, "read failed for " + path.string());
    return bytes;
}

std::string read_file_text(const fs::path& path) {
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void atomic_write_file(const fs::path& path, const void* data, std::size_t size) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    fs::path temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            raise(ErrorCode::StorageError, "cannot create " + temp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        out.flush();
        if (!out)
            raise(ErrorCode::StorageError, "write failed for " + temp.string());
    }
    fs::rename(temp, path, ec);
    if (ec)
        raise(ErrorCode::StorageError, "rename failed for " + path.string() + ": " + ec.message());
}

void atomic_write_file(const fs::path& path, const std::string& text) {
    atomic_write_file(path, text.data(), text.size());
}

void atomic_write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    atomic_write_file(path, bytes.data(), bytes.size());
}

void append_line(const fs::path& path, const std::string& line) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out)
        raise(ErrorCode::StorageError, "cannot open " + path.string() + " for append");
    out << line << '\n';
    out.flush();
    if (!out)
        raise(ErrorCode::StorageError, "append failed for " + path.string());
}

DirectoryLock::DirectoryLock(const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    fs::path lock_path = directory / ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0)
        raise(ErrorCode::StorageError, "cannot open lock file " + lock_path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
        ::close(fd_);
        fd_ = -1;
        raise(ErrorCode::StorageError, "cannot lock " + lock_path.string());
    }
}

DirectoryLock::~DirectoryLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

} // namespace matef
