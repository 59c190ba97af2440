#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace matef {

/// Single-entry ZIP archive, store method, legacy ZipCrypto encryption. The
/// password is a contamination guard for malware corpora, not a
/// confidentiality control; containers are byte-reproducible for a given
/// (entry name, payload, password).
std::vector<std::uint8_t> write_encrypted_container(const std::string& entry_name,
                                                    std::span<const std::uint8_t> payload,
                                                    const std::string& password);

struct ContainerEntry {
    std::string name;
    std::vector<std::uint8_t> payload;
};

/// Throws ContainerUnreadable on structural damage or a failed password
/// check. A payload-region flip decrypts to garbage and is left for the
/// caller's digest comparison to catch, so integrity reports can show both
/// digests.
ContainerEntry read_encrypted_container(std::span<const std::uint8_t> archive,
                                        const std::string& password);

} // namespace matef
