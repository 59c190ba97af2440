#include <doctest.h>

#include "matef/errors.hpp"
#include "matef/zip_container.hpp"

#include "test_support.hpp"

#include <numeric>

using namespace matef;

TEST_SUITE("zip") {

TEST_CASE("round trip preserves bytes and entry name") {
    auto payload = test::mz_bytes();
    auto archive = write_encrypted_container("a.bin", payload, "infected");
    auto entry = read_encrypted_container(archive, "infected");
    CHECK(entry.name == "a.bin");
    CHECK(entry.payload == payload);
}

TEST_CASE("round trip on a 10 KiB payload") {
    std::vector<std::uint8_t> payload(10240);
    std::iota(payload.begin(), payload.end(), std::uint8_t(0));
    auto archive = write_encrypted_container("big.bin", payload, "pw");
    CHECK(read_encrypted_container(archive, "pw").payload == payload);
}

TEST_CASE("identical inputs produce identical archives") {
    auto payload = test::mz_bytes();
    auto a = write_encrypted_container("x.bin", payload, "infected");
    auto b = write_encrypted_container("x.bin", payload, "infected");
    CHECK(a == b);
}

TEST_CASE("wrong password fails the header check") {
    auto archive = write_encrypted_container("a.bin", test::mz_bytes(), "infected");
    CHECK_THROWS_AS(read_encrypted_container(archive, "wrong"), MatefError);
    try {
        read_encrypted_container(archive, "wrong");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::ContainerUnreadable);
    }
}

TEST_CASE("truncated archive is unreadable") {
    auto archive = write_encrypted_container("a.bin", test::mz_bytes(), "infected");
    archive.resize(20);
    CHECK_THROWS_AS(read_encrypted_container(archive, "infected"), MatefError);
}

TEST_CASE("payload tampering decrypts to different bytes") {
    auto payload = test::mz_bytes();
    auto archive = write_encrypted_container("a.bin", payload, "infected");
    // Encrypted payload starts after the 30-byte local header, the entry
    // name and the 12-byte encryption header; flip its last byte.
    std::size_t data_start = 30 + 5 + 12;
    archive[data_start + payload.size() - 1] ^= 0x01;
    auto entry = read_encrypted_container(archive, "infected");
    CHECK(entry.payload != payload);
    CHECK(entry.payload.size() == payload.size());
}

} // TEST_SUITE
