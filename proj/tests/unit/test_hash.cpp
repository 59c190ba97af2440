#include <doctest.h>

#include "matef/hash.hpp"

#include "test_support.hpp"

using namespace matef;

TEST_SUITE("hash") {

TEST_CASE("sha256 known-answer vectors") {
    // FIPS 180-2 vectors plus the MZ-stub digest from an independent
    // implementation.
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    auto bytes = test::mz_bytes();
    CHECK(sha256_hex(std::span<const std::uint8_t>(bytes)) == test::kMzDigest);
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("/") == 0xaf63a24c860189feULL);
}

TEST_CASE("sha256 hex validation") {
    CHECK(is_sha256_hex(test::kMzDigest));
    CHECK_FALSE(is_sha256_hex("abc"));
    CHECK_FALSE(is_sha256_hex(std::string(64, 'G')));
    std::string upper(test::kMzDigest);
    upper[0] = 'F';
    CHECK_FALSE(is_sha256_hex(upper)); // uppercase rejected
}

} // TEST_SUITE
