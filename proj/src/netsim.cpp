#include "matef/netsim.hpp"

#include "matef/errors.hpp"
#include "matef/log_ingest.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <sstream>

namespace matef {

namespace {

// DNS wire format, RFC 1035 subset:
//   header  ID(2) FLAGS(2) QDCOUNT(2) ANCOUNT(2) NSCOUNT(2) ARCOUNT(2)
//   question  QNAME (length-prefixed labels, 0 terminator) QTYPE(2) QCLASS(2)
// Only plain label sequences are accepted in questions; a compression pointer
// or oversize label marks the packet malformed.

constexpr std::size_t kDnsHeaderSize = 12;
constexpr std::uint16_t kTypeA = 1;
constexpr std::uint16_t kClassIn = 1;

std::optional<std::array<std::uint8_t, 4>> parse_ipv4(const std::string& text) {
    std::array<std::uint8_t, 4> out{};
    in_addr addr{};
    if (inet_pton(AF_INET, text.c_str(), &addr) != 1)
        return std::nullopt;
    std::memcpy(out.data(), &addr.s_addr, 4);
    return out;
}

struct Question {
    std::string qname;
    std::uint16_t qtype = 0;
    std::uint16_t qclass = 0;
    std::size_t end = 0; // offset just past the question section
};

std::optional<Question> parse_question(std::span<const std::uint8_t> packet) {
    Question q;
    std::size_t at = kDnsHeaderSize;
    std::string name;
    std::size_t name_bytes = 0;
    while (true) {
        if (at >= packet.size())
            return std::nullopt;
        std::uint8_t len = packet[at++];
        if (len == 0)
            break;
        if (len > 63) // includes 0xC0 compression pointers
            return std::nullopt;
        if (at + len > packet.size())
            return std::nullopt;
        name_bytes += len + 1;
        if (name_bytes > 255)
            return std::nullopt;
        if (!name.empty())
            name.push_back('.');
        name.append(reinterpret_cast<const char*>(packet.data() + at), len);
        at += len;
    }
    if (at + 4 > packet.size())
        return std::nullopt;
    q.qname = name.empty() ? "." : name;
    q.qtype = static_cast<std::uint16_t>((packet[at] << 8) | packet[at + 1]);
    q.qclass = static_cast<std::uint16_t>((packet[at + 2] << 8) | packet[at + 3]);
    q.end = at + 4;
    return q;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

} // namespace

void NetSimConfig::validate() const {
    if (!parse_ipv4(answer_ip))
        raise(ErrorCode::SchemaError, "answer_ip is not a valid dotted quad: " + answer_ip);
    if (dns_ttl == 0)
        raise(ErrorCode::SchemaError, "dns_ttl must be positive");
}

DnsReply handle_dns_query(std::span<const std::uint8_t> packet, const NetSimConfig& config,
                          UnixSeconds at, std::string_view peer) {
    DnsReply reply;
    if (packet.size() < kDnsHeaderSize)
        return reply;
    const std::uint16_t qdcount = static_cast<std::uint16_t>((packet[4] << 8) | packet[5]);
    if (qdcount != 1)
        return reply;
    auto question = parse_question(packet);
    if (!question)
        return reply;

    auto answer_ip = parse_ipv4(config.answer_ip);
    if (!answer_ip)
        raise(ErrorCode::SchemaError, "answer_ip is not a valid dotted quad: " + config.answer_ip);

    const bool answerable = question->qtype == kTypeA && question->qclass == kClassIn;

    std::vector<std::uint8_t> response;
    response.reserve(question->end + 16);
    response.push_back(packet[0]); // transaction id
    response.push_back(packet[1]);
    const std::uint8_t rd = packet[2] & 0x01;
    response.push_back(static_cast<std::uint8_t>(0x80 | (packet[2] & 0x78) | rd)); // QR=1, opcode copied
    response.push_back(0x80);                                                      // RA=1, RCODE=0
    put_u16(response, 1);                           // QDCOUNT
    put_u16(response, answerable ? 1 : 0);          // ANCOUNT
    put_u16(response, 0);                           // NSCOUNT
    put_u16(response, 0);                           // ARCOUNT
    response.insert(response.end(), packet.begin() + kDnsHeaderSize,
                    packet.begin() + static_cast<std::ptrdiff_t>(question->end));
    if (answerable) {
        response.push_back(0xC0); // pointer to qname at offset 12
        response.push_back(0x0C);
        put_u16(response, kTypeA);
        put_u16(response, kClassIn);
        put_u32(response, config.dns_ttl);
        put_u16(response, 4);
        response.insert(response.end(), answer_ip->begin(), answer_ip->end());
    }

    reply.response = std::move(response);
    reply.event = NetEvent{at, ArtifactCategory::DnsQuery, std::string(peer), question->qname};
    return reply;
}

HttpReply handle_http_request(std::span<const std::uint8_t> stream_bytes,
                              const NetSimConfig& config, UnixSeconds at,
                              std::string_view peer) {
    HttpReply reply;
    std::string_view text(reinterpret_cast<const char*>(stream_bytes.data()),
                          stream_bytes.size());
    std::string_view line = text.substr(0, text.find('\n'));
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);

    auto first_sp = line.find(' ');
    auto second_sp = first_sp == std::string_view::npos ? std::string_view::npos
                                                        : line.find(' ', first_sp + 1);
    bool ok = first_sp != std::string_view::npos && second_sp != std::string_view::npos &&
              first_sp > 0 && second_sp > first_sp + 1;
    std::string_view method, target, version;
    if (ok) {
        method = line.substr(0, first_sp);
        target = line.substr(first_sp + 1, second_sp - first_sp - 1);
        version = line.substr(second_sp + 1);
        ok = version.size() > 7 && version.rfind("HTTP/1.", 0) == 0;
        for (std::size_t i = 7; ok && i < version.size(); ++i)
            ok = version[i] >= '0' && version[i] <= '9';
    }

    std::ostringstream response;
    if (!ok) {
        response << "HTTP/1.1 400 Bad Request\r\n"
                 << "Content-Length: 0\r\n"
                 << "Connection: close\r\n\r\n";
        reply.response = response.str();
        return reply;
    }

    response << "HTTP/1.1 200 OK\r\n"
             << "Content-Length: " << config.http_body.size() << "\r\n"
             << "Connection: close\r\n\r\n"
             << config.http_body;
    reply.response = response.str();
    reply.event = NetEvent{at, ArtifactCategory::HttpRequest, std::string(peer),
                           std::string(method) + " " + std::string(target)};
    return reply;
}

void NetEventLog::append(NetEvent event) {
    std::lock_guard lock(mutex_);
    events_.push_back(std::move(event));
}

void NetEventLog::note_malformed() {
    std::lock_guard lock(mutex_);
    ++malformed_;
}

std::vector<NetEvent> NetEventLog::drain() {
    std::lock_guard lock(mutex_);
    std::vector<NetEvent> out;
    out.swap(events_);
    return out;
}

std::uint64_t NetEventLog::malformed_count() const {
    std::lock_guard lock(mutex_);
    return malformed_;
}

std::string net_events_to_csv(const std::vector<NetEvent>& events) {
    std::string out;
    for (const auto& event : events) {
        out += matef_csv_line(event.at, event.peer, 0,
                              operation_token(event.category), event.detail, "SUCCESS");
        out += '\n';
    }
    return out;
}

NetSimServer::NetSimServer(NetSimConfig config, std::shared_ptr<Clock> clock)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : std::shared_ptr<Clock>(default_clock())) {}

NetSimServer::~NetSimServer() {
    stop();
}

void NetSimServer::start() {
    config_.validate();

    dns_fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    http_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (dns_fd_ < 0 || http_fd_ < 0)
        raise(ErrorCode::StorageError, "cannot create netsim sockets");

    int reuse = 1;
    ::setsockopt(http_fd_, SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof(reuse));

    auto bind_to = [](int fd, std::uint16_t port) -> std::uint16_t {
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        addr.sin_port = htons(port);
        if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
            raise(ErrorCode::StorageError,
                  "cannot bind netsim socket to port " + std::to_string(port));
        socklen_t len = sizeof(addr);
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    };

    bound_dns_port_ = bind_to(dns_fd_, config_.dns_port);
    bound_http_port_ = bind_to(http_fd_, config_.http_port);
    if (::listen(http_fd_, 16) != 0)
        raise(ErrorCode::StorageError, "cannot listen on http socket");

    running_ = true;
    dns_thread_ = std::thread(&NetSimServer::dns_loop, this);
    http_thread_ = std::thread(&NetSimServer::http_loop, this);
}

void NetSimServer::stop() {
    if (!running_.exchange(false))
        return;
    if (dns_thread_.joinable())
        dns_thread_.join();
    if (http_thread_.joinable())
        http_thread_.join();
    if (dns_fd_ >= 0)
        ::close(dns_fd_);
    if (http_fd_ >= 0)
        ::close(http_fd_);
    dns_fd_ = http_fd_ = -1;
}

void NetSimServer::dns_loop() {
    std::array<std::uint8_t, 4096> buffer{};
    while (running_) {
        pollfd pfd{dns_fd_, POLLIN, 0};
        int ready = ::poll(&pfd, 1, 100);
        if (ready <= 0)
            continue;
        sockaddr_in peer_addr{};
        socklen_t peer_len = sizeof(peer_addr);
        ssize_t received = ::recvfrom(dns_fd_, buffer.data(), buffer.size(), 0,
                                      reinterpret_cast<sockaddr*>(&peer_addr), &peer_len);
        if (received < 0)
            continue;
        char peer_text[INET_ADDRSTRLEN] = {0};
        inet_ntop(AF_INET, &peer_addr.sin_addr, peer_text, sizeof(peer_text));
        auto reply = handle_dns_query(
            std::span<const std::uint8_t>(buffer.data(), static_cast<std::size_t>(received)),
            config_, clock_->now(), peer_text);
        if (!reply.response) {
            log_.note_malformed();
            continue;
        }
        ::sendto(dns_fd_, reply.response->data(), reply.response->size(), 0,
                 reinterpret_cast<sockaddr*>(&peer_addr), peer_len);
        if (reply.event)
            log_.append(std::move(*reply.event));
    }
}

void NetSimServer::http_loop() {
    while (running_) {
        pollfd pfd{http_fd_, POLLIN, 0};
        int ready = ::poll(&pfd, 1, 100);
        if (ready <= 0)
            continue;
        sockaddr_in peer_addr{};
        socklen_t peer_len = sizeof(peer_addr);
        int conn = ::accept(http_fd_, reinterpret_cast<sockaddr*>(&peer_addr), &peer_len);
        if (conn < 0)
            continue;
        char peer_text[INET_ADDRSTRLEN] = {0};
        inet_ntop(AF_INET, &peer_addr.sin_addr, peer_text, sizeof(peer_text));

        // One request per connection; read until the header terminator, EOF
        // or a size cap.
        std::vector<std::uint8_t> request;
        std::array<std::uint8_t, 4096> chunk{};
        for (int spins = 0; spins < 50 && request.size() < 65536; ++spins) {
            pollfd cpfd{conn, POLLIN, 0};
            if (::poll(&cpfd, 1, 100) <= 0)
                break;
            ssize_t got = ::recv(conn, chunk.data(), chunk.size(), 0);
            if (got <= 0)
                break;
            request.insert(request.end(), chunk.begin(), chunk.begin() + got);
            std::string_view view(reinterpret_cast<const char*>(request.data()), request.size());
            if (view.find("\r\n\r\n") != std::string_view::npos ||
                view.find("\n\n") != std::string_view::npos)
                break;
        }

        auto reply = handle_http_request(request, config_, clock_->now(), peer_text);
        ::send(conn, reply.response.data(), reply.response.size(), 0);
        ::shutdown(conn, SHUT_RDWR);
        ::close(conn);
        if (reply.event)
            log_.append(std::move(*reply.event));
    }
}

} // namespace matef
