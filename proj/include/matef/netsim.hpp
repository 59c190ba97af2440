#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "matef/category.hpp"
#include "matef/time_util.hpp"

namespace matef {

/// DNS/HTTP responder configuration. Default ports are unprivileged so tests
/// run without elevated rights; port 0 asks the OS for an ephemeral port.
struct NetSimConfig {
    std::uint16_t dns_port = 5353;
    std::uint16_t http_port = 8080;
    std::string answer_ip = "10.0.0.1"; // sinkhole answer for every A query
    std::string http_body = "matef internet simulation\n";
    std::uint32_t dns_ttl = 60;

    void validate() const; // SchemaError on bad answer_ip
};

struct NetEvent {
    UnixSeconds at = 0;
    ArtifactCategory category = ArtifactCategory::DnsQuery; // DnsQuery or HttpRequest
    std::string peer;
    std::string detail; // qname, or "METHOD target"
};

struct DnsReply {
    std::optional<std::vector<std::uint8_t>> response; // none for malformed packets
    std::optional<NetEvent> event;
};

/// Pure responder for one UDP packet. Well-formed queries (QDCOUNT = 1,
/// intact question) always get an answer: A/IN resolves to the configured
/// sinkhole address, other QTYPEs get NOERROR with an empty answer section.
/// Malformed packets produce neither response nor event.
DnsReply handle_dns_query(std::span<const std::uint8_t> packet, const NetSimConfig& config,
                          UnixSeconds at, std::string_view peer);

struct HttpReply {
    std::string response;
    std::optional<NetEvent> event; // absent for 400s
};

/// Pure responder for one HTTP/1.x connection's bytes. Any parseable request
/// line gets 200 with the fixed body, method-agnostic; otherwise 400.
HttpReply handle_http_request(std::span<const std::uint8_t> stream_bytes,
                              const NetSimConfig& config, UnixSeconds at,
                              std::string_view peer);

/// FIFO event log with serialized appends; drain returns and clears.
class NetEventLog {
public:
    void append(NetEvent event);
    void note_malformed();
    std::vector<NetEvent> drain();
    std::uint64_t malformed_count() const;

private:
    mutable std::mutex mutex_;
    std::vector<NetEvent> events_;
    std::uint64_t malformed_ = 0;
};

std::string net_events_to_csv(const std::vector<NetEvent>& events);

/// UDP DNS + TCP HTTP listeners on loopback-reachable sockets. The simulator
/// never opens outbound connections.
class NetSimServer {
public:
    explicit NetSimServer(NetSimConfig config, std::shared_ptr<Clock> clock = nullptr);
    ~NetSimServer();

    void start();
    void stop();

    std::uint16_t dns_port() const { return bound_dns_port_; }
    std::uint16_t http_port() const { return bound_http_port_; }

    std::vector<NetEvent> drain_events() { return log_.drain(); }
    std::uint64_t malformed_count() const { return log_.malformed_count(); }

private:
    void dns_loop();
    void http_loop();

    NetSimConfig config_;
    std::shared_ptr<Clock> clock_;
    NetEventLog log_;
    std::atomic<bool> running_{false};
    int dns_fd_ = -1;
    int http_fd_ = -1;
    std::uint16_t bound_dns_port_ = 0;
    std::uint16_t bound_http_port_ = 0;
    std::thread dns_thread_;
    std::thread http_thread_;
};

} // namespace matef
