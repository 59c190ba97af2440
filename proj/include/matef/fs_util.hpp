#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace matef {

/// Data root: $MATEF_HOME if set, otherwise ./matef-data.
std::filesystem::path matef_home();

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

/// Write-temp-then-rename so readers never observe a half-written file.
void atomic_write_file(const std::filesystem::path& path, const void* data, std::size_t size);
void atomic_write_file(const std::filesystem::path& path, const std::string& text);
void atomic_write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

void append_line(const std::filesystem::path& path, const std::string& line);

/// Advisory flock on <dir>/.lock held for the object's lifetime.
class DirectoryLock {
public:
    explicit DirectoryLock(const std::filesystem::path& directory);
    ~DirectoryLock();

    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace matef
