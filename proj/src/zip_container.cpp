#include "matef/zip_container.hpp"

#include "matef/errors.hpp"
#include "matef/hash.hpp"

#include <array>
#include <cstring>

// Archive layout (PKWARE APPNOTE subset):
//   [local file header][12-byte ZipCrypto header + encrypted payload]
//   [central directory header][end of central directory]
// Method 0 (store), general-purpose flag bit 0 set (encrypted), fixed DOS
// timestamp 1980-01-01 so identical inputs produce identical archives.

namespace matef {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralSig = 0x06054b50;
constexpr std::uint16_t kDosEpochDate = 0x0021; // 1980-01-01
constexpr std::uint16_t kFlagEncrypted = 0x0001;

constexpr std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int bit = 0; bit < 8; ++bit)
            c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
        table[i] = c;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

std::uint32_t crc_step(std::uint32_t key, std::uint8_t byte) {
    return (key >> 8) ^ kCrcTable[(key ^ byte) & 0xff];
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes)
        crc = crc_step(crc, b);
    return crc ^ 0xFFFFFFFFu;
}

// Traditional PKWARE stream cipher. Keys advance on plaintext bytes.
class ZipCrypto {
public:
    explicit ZipCrypto(const std::string& password) {
        for (unsigned char c : password)
            update(c);
    }

    std::uint8_t encrypt_byte(std::uint8_t plain) {
        std::uint8_t out = plain ^ keystream();
        update(plain);
        return out;
    }

    std::uint8_t decrypt_byte(std::uint8_t cipher) {
        std::uint8_t plain = cipher ^ keystream();
        update(plain);
        return plain;
    }

private:
    std::uint8_t keystream() const {
        std::uint16_t t = static_cast<std::uint16_t>((key2_ | 2) & 0xFFFF);
        return static_cast<std::uint8_t>((t * (t ^ 1)) >> 8);
    }

    void update(std::uint8_t byte) {
        key0_ = crc_step(key0_, byte);
        key1_ = (key1_ + (key0_ & 0xFF)) * 134775813u + 1u;
        key2_ = crc_step(key2_, static_cast<std::uint8_t>(key1_ >> 24));
    }

    std::uint32_t key0_ = 305419896u;
    std::uint32_t key1_ = 591751049u;
    std::uint32_t key2_ = 878082192u;
};

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::uint16_t get16(std::span<const std::uint8_t> buf, std::size_t at) {
    return static_cast<std::uint16_t>(buf[at] | (buf[at + 1] << 8));
}

std::uint32_t get32(std::span<const std::uint8_t> buf, std::size_t at) {
    return static_cast<std::uint32_t>(buf[at]) |
           (static_cast<std::uint32_t>(buf[at + 1]) << 8) |
           (static_cast<std::uint32_t>(buf[at + 2]) << 16) |
           (static_cast<std::uint32_t>(buf[at + 3]) << 24);
}

} // namespace

std::vector<std::uint8_t> write_encrypted_container(const std::string& entry_name,
                                                    std::span<const std::uint8_t> payload,
                                                    const std::string& password) {
    const std::uint32_t crc = crc32_of(payload);

    // Encryption header: 11 bytes derived from SHA-256(sha256(payload) || password)
    // for reproducible archives, then the CRC high byte as the password check.
    std::array<std::uint8_t, 12> header{};
    {
        std::string seed_hex = sha256_hex(sha256_hex(payload) + password);
        for (int i = 0; i < 11; ++i) {
            auto nibble = [&](char c) -> std::uint8_t {
                return static_cast<std::uint8_t>(c <= '9' ? c - '0' : c - 'a' + 10);
            };
            header[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
                (nibble(seed_hex[static_cast<std::size_t>(2 * i)]) << 4) |
                nibble(seed_hex[static_cast<std::size_t>(2 * i + 1)]));
        }
        header[11] = static_cast<std::uint8_t>(crc >> 24);
    }

    ZipCrypto cipher(password);
    std::vector<std::uint8_t> encrypted;
    encrypted.reserve(12 + payload.size());
    for (std::uint8_t b : header)
        encrypted.push_back(cipher.encrypt_byte(b));
    for (std::uint8_t b : payload)
        encrypted.push_back(cipher.encrypt_byte(b));

    const auto name_len = static_cast<std::uint16_t>(entry_name.size());
    const auto comp_size = static_cast<std::uint32_t>(encrypted.size());
    const auto uncomp_size = static_cast<std::uint32_t>(payload.size());

    std::vector<std::uint8_t> out;
    out.reserve(encrypted.size() + entry_name.size() * 2 + 128);

    put32(out, kLocalHeaderSig);
    put16(out, 20);             // version needed
    put16(out, kFlagEncrypted);
    put16(out, 0);              // method: store
    put16(out, 0);              // dos time
    put16(out, kDosEpochDate);
    put32(out, crc);
    put32(out, comp_size);
    put32(out, uncomp_size);
    put16(out, name_len);
    put16(out, 0);              // extra length
    out.insert(out.end(), entry_name.begin(), entry_name.end());
    out.insert(out.end(), encrypted.begin(), encrypted.end());

    const auto central_offset = static_cast<std::uint32_t>(out.size());
    put32(out, kCentralHeaderSig);
    put16(out, 20);             // version made by
    put16(out, 20);             // version needed
    put16(out, kFlagEncrypted);
    put16(out, 0);
    put16(out, 0);
    put16(out, kDosEpochDate);
    put32(out, crc);
    put32(out, comp_size);
    put32(out, uncomp_size);
    put16(out, name_len);
    put16(out, 0);              // extra
    put16(out, 0);              // comment
    put16(out, 0);              // disk start
    put16(out, 0);              // internal attrs
    put32(out, 0);              // external attrs
    put32(out, 0);              // local header offset
    out.insert(out.end(), entry_name.begin(), entry_name.end());
    const auto central_size = static_cast<std::uint32_t>(out.size()) - central_offset;

    put32(out, kEndOfCentralSig);
    put16(out, 0);              // disk number
    put16(out, 0);              // central dir disk
    put16(out, 1);              // entries on disk
    put16(out, 1);              // entries total
    put32(out, central_size);
    put32(out, central_offset);
    put16(out, 0);              // comment length
    return out;
}

ContainerEntry read_encrypted_container(std::span<const std::uint8_t> archive,
                                        const std::string& password) {
    if (archive.size() < 30 || get32(archive, 0) != kLocalHeaderSig)
        raise(ErrorCode::ContainerUnreadable, "missing local file header");
    const std::uint16_t flags = get16(archive, 6);
    const std::uint16_t method = get16(archive, 8);
    const std::uint32_t crc = get32(archive, 14);
    const std::uint32_t comp_size = get32(archive, 18);
    const std::uint32_t uncomp_size = get32(archive, 22);
    const std::uint16_t name_len = get16(archive, 26);
    const std::uint16_t extra_len = get16(archive, 28);

    if ((flags & kFlagEncrypted) == 0 || method != 0)
        raise(ErrorCode::ContainerUnreadable, "expected an encrypted stored entry");
    if (comp_size < 12 || comp_size != uncomp_size + 12)
        raise(ErrorCode::ContainerUnreadable, "inconsistent entry sizes");

    const std::size_t data_at = 30u + name_len + extra_len;
    if (archive.size() < data_at + comp_size)
        raise(ErrorCode::ContainerUnreadable, "archive truncated");

    ContainerEntry entry;
    entry.name.assign(reinterpret_cast<const char*>(archive.data() + 30), name_len);

    ZipCrypto cipher(password);
    std::array<std::uint8_t, 12> header{};
    for (std::size_t i = 0; i < 12; ++i)
        header[i] = cipher.decrypt_byte(archive[data_at + i]);
    if (header[11] != static_cast<std::uint8_t>(crc >> 24))
        raise(ErrorCode::ContainerUnreadable, "password check failed for entry " + entry.name);

    entry.payload.reserve(uncomp_size);
    for (std::size_t i = 12; i < comp_size; ++i)
        entry.payload.push_back(cipher.decrypt_byte(archive[data_at + i]));
    return entry;
}

} // namespace matef
