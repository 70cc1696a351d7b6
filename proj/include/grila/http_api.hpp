#pragma once

#include "grila/admin_service.hpp"
#include "grila/auth.hpp"
#include "grila/config.hpp"
#include "grila/error.hpp"
#include "grila/persistence.hpp"
#include "grila/test_engine.hpp"

#include "httplib.h"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace grila {

using Clock = std::function<Timestamp()>;

Timestamp system_now();

int http_status(ErrorCode code);

/// Fixed-window limit on password recovery requests per client address.
class RecoveryThrottle {
public:
    RecoveryThrottle(std::int64_t max_requests, std::int64_t window_seconds)
        : max_requests_(max_requests), window_seconds_(window_seconds) {}

    /// Records the attempt; false when the address is over its limit.
    bool allow(const std::string& address, Timestamp now);

private:
    std::int64_t max_requests_;
    std::int64_t window_seconds_;
    std::mutex mutex_;
    std::map<std::string, std::deque<Timestamp>> seen_;
};

/// HTTP+JSON routes over the auth, engine and admin services. Error bodies
/// are always {"error": code, "message": text}.
class ApiServer {
public:
    ApiServer(Store& store, ServerConfig config, Clock clock = system_now, TicketSink sink = {});
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds to an ephemeral port and returns it.
    int bind_any_port(const std::string& host = "127.0.0.1");
    void bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    /// Binds to an ephemeral port and serves from a background thread.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();
    void wait_until_ready() const;

    AuthService& auth() { return auth_; }
    TestEngine& engine() { return engine_; }
    AdminService& admin() { return admin_; }

private:
    void register_routes();

    Store& store_;
    ServerConfig config_;
    Clock clock_;
    AuthService auth_;
    TestEngine engine_;
    AdminService admin_;
    RecoveryThrottle throttle_;
    httplib::Server server_;
    std::thread background_;
};

/// Runs the service until stop() is called: opens the store, verifies the
/// schema, serves the routes and sweeps overdue sessions periodically.
class Service {
public:
    /// Throws the store's ConnectionError / SelectionError unchanged.
    explicit Service(const ServerConfig& config);
    ~Service();

    void run();
    void stop();

private:
    ServerConfig config_;
    Store store_;
    std::unique_ptr<ApiServer> api_;
    std::mutex mutex_;
    std::condition_variable wake_;
    bool stopping_ = false;
};

} // namespace grila
