#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace matef {

/// Seconds since the Unix epoch, UTC. Second precision is all the artifact
/// needs and keeps RFC 3339 round-trips exact.
using UnixSeconds = std::int64_t;

std::string format_rfc3339(UnixSeconds at);

/// Strict "YYYY-MM-DDTHH:MM:SSZ" parser; nullopt on any deviation.
std::optional<UnixSeconds> parse_rfc3339(std::string_view text);

/// Injectable clock so determinism tests can freeze time.
class Clock {
public:
    virtual ~Clock() = default;
    virtual UnixSeconds now() const = 0;
};

class SystemClock final : public Clock {
public:
    UnixSeconds now() const override;
};

class FixedClock final : public Clock {
public:
    explicit FixedClock(UnixSeconds at) : at_(at) {}
    UnixSeconds now() const override { return at_; }

private:
    UnixSeconds at_;
};

/// System clock unless MATEF_FROZEN_TIME (RFC 3339) is set, in which case a
/// frozen clock pinned to that instant.
std::unique_ptr<Clock> default_clock();

} // namespace matef
