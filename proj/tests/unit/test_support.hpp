#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace matef::test {

/// Fresh directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "matef-test") {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / (prefix + "-" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directories(candidate, ec) && !ec) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create temp directory");
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::vector<std::uint8_t> mz_bytes() {
    return {0x4D, 0x5A, 0x90, 0x00};
}

// SHA-256 of the 4 bytes above, computed with an independent implementation.
inline constexpr const char* kMzDigest =
    "9f2981a7cc4d40a2a409dc895de64253acd819d7c0011c8e80b86fe899464e31";

} // namespace matef::test
