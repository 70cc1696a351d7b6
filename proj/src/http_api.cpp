#include "grila/http_api.hpp"

#include "grila/json_codec.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>

namespace grila {

Timestamp system_now()
{
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

int http_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::WeakInput:
    case ErrorCode::InvalidTicket:
        return 400;
    case ErrorCode::AuthFailed:
    case ErrorCode::Unauthenticated:
        return 401;
    case ErrorCode::Forbidden:
        return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownTest:
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownResult:
    case ErrorCode::UnknownEntity:
        return 404;
    case ErrorCode::DuplicateIdentity:
    case ErrorCode::ConstraintError:
    case ErrorCode::SessionAlreadyActive:
    case ErrorCode::SessionFinished:
    case ErrorCode::ForwardOnly:
    case ErrorCode::IncompleteSession:
        return 409;
    case ErrorCode::ValidationFailed:
    case ErrorCode::InvalidTest:
    case ErrorCode::UnknownOption:
        return 422;
    case ErrorCode::RateLimited:
        return 429;
    case ErrorCode::ConnectionError:
    case ErrorCode::SelectionError:
    case ErrorCode::StorageError:
    case ErrorCode::ConfigError:
        return 500;
    }
    return 500;
}

bool RecoveryThrottle::allow(const std::string& address, Timestamp now)
{
    std::lock_guard lock(mutex_);
    auto& seen = seen_[address];
    while (!seen.empty() && seen.front() <= now - window_seconds_)
        seen.pop_front();
    if (static_cast<std::int64_t>(seen.size()) >= max_requests_)
        return false;
    seen.push_back(now);
    return true;
}

namespace {

using httplib::Request;
using httplib::Response;

// Identical for known and unknown addresses.
constexpr const char* kRecoverResponse =
    R"({"status":"accepted","message":"If the address belongs to an account, a reset ticket has been issued."})";

void send_json(Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, ErrorCode code, const std::string& message)
{
    send_json(res, http_status(code), {{"error", to_string(code)}, {"message", message}});
}

std::string bearer_token(const Request& req)
{
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0)
        return {};
    return header.substr(prefix.size());
}

Id parse_id(std::string_view text)
{
    Id value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw Error(ErrorCode::BadRequest, "invalid numeric value '" + std::string(text) + "'");
    return value;
}

Id path_id(const Request& req, std::size_t index = 1)
{
    return parse_id(req.matches[index].str());
}

template <typename T>
T field(const json& body, const char* name)
{
    return decode([&] {
        if (!body.is_object() || !body.contains(name))
            throw Error(ErrorCode::BadRequest, std::string("missing field \"") + name + "\"");
        return body.at(name).get<T>();
    });
}

Locale request_locale(const Request& req)
{
    if (req.has_param("locale")) {
        if (auto locale = parse_locale(req.get_param_value("locale")))
            return *locale;
        throw Error(ErrorCode::BadRequest, "locale must be 'ro' or 'en'");
    }
    return Locale::Romanian;
}

} // namespace

ApiServer::ApiServer(Store& store, ServerConfig config, Clock clock, TicketSink sink)
    : store_(store),
      config_(std::move(config)),
      clock_(std::move(clock)),
      auth_(store_,
            AuthConfig{config_.token_ttl_seconds, config_.reset_ticket_ttl_seconds,
                       parse_hash_profile(config_.password_hash_profile)
                           .value_or(HashProfile::Interactive)},
            std::move(sink)),
      engine_(store_),
      admin_(store_, auth_),
      throttle_(config_.recovery_requests_per_window, config_.recovery_window_seconds)
{
    register_routes();
}

ApiServer::~ApiServer()
{
    stop();
}

int ApiServer::bind_any_port(const std::string& host)
{
    int port = server_.bind_to_any_port(host);
    if (port < 0)
        throw Error(ErrorCode::ConfigError, "cannot bind to " + host);
    return port;
}

void ApiServer::bind(const std::string& host, int port)
{
    if (!server_.bind_to_port(host, port))
        throw Error(ErrorCode::ConfigError,
                    "cannot bind to " + host + ":" + std::to_string(port));
}

void ApiServer::listen()
{
    server_.listen_after_bind();
}

int ApiServer::start_background(const std::string& host)
{
    int port = bind_any_port(host);
    background_ = std::thread([this] { server_.listen_after_bind(); });
    wait_until_ready();
    return port;
}

void ApiServer::stop()
{
    server_.stop();
    if (background_.joinable())
        background_.join();
}

void ApiServer::wait_until_ready() const
{
    server_.wait_until_ready();
}

void ApiServer::register_routes()
{
    using Handler = std::function<void(const Request&, Response&)>;
    auto guarded = [](Handler fn) {
        return [fn = std::move(fn)](const Request& req, Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const json::exception& e) {
                send_error(res, ErrorCode::BadRequest, e.what());
            } catch (const std::exception& e) {
                spdlog::error("{} {}: {}", req.method, req.path, e.what());
                send_error(res, ErrorCode::StorageError, "internal error");
            }
        };
    };
    auto principal = [this](const Request& req, std::optional<Role> required = std::nullopt) {
        return auth_.authorize(bearer_token(req), required, clock_());
    };
    auto supervisor = [principal](const Request& req) { return principal(req, Role::Supervisor); };
    auto body = [](const Request& req) { return parse_json(req.body); };
    auto own_session = [this](const Principal& p, Id session_id) {
        auto session = get_session(store_, session_id);
        if (!session)
            throw Error(ErrorCode::UnknownSession, "unknown session " + std::to_string(session_id));
        if (session->user_id != p.user_id)
            throw Error(ErrorCode::Forbidden, "session belongs to another user");
    };

    auto& s = server_;

    s.Get("/api/health", guarded([](const Request&, Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    }));

    s.Get("/api/links", guarded([this](const Request&, Response& res) {
        json links = json::array();
        for (const auto& link : config_.education_links)
            links.push_back({{"label", link.label}, {"url", link.url}});
        send_json(res, 200, {{"links", links}});
    }));

    // --- accounts -----------------------------------------------------------

    s.Post("/api/register", guarded([this, body](const Request& req, Response& res) {
        const auto b = body(req);
        Registration input{field<std::string>(b, "username"), field<std::string>(b, "password"),
                           field<std::string>(b, "name"), field<std::string>(b, "first_name"),
                           field<std::string>(b, "email")};
        send_json(res, 201, auth_.register_user(input, clock_()));
    }));

    s.Post("/api/login", guarded([this, body](const Request& req, Response& res) {
        const auto b = body(req);
        auto token =
            auth_.login(field<std::string>(b, "username"), field<std::string>(b, "password"),
                        clock_());
        send_json(res, 200,
                  {{"token", token.token},
                   {"expires_at", token.expires_at},
                   {"user", *get_user(store_, token.user_id)}});
    }));

    s.Post("/api/logout", guarded([this, principal](const Request& req, Response& res) {
        principal(req);
        auth_.logout(bearer_token(req));
        send_json(res, 200, {{"status", "logged_out"}});
    }));

    s.Get("/api/me", guarded([this, principal](const Request& req, Response& res) {
        auto p = principal(req);
        send_json(res, 200, *get_user(store_, p.user_id));
    }));

    s.Post("/api/recover", guarded([this, body](const Request& req, Response& res) {
        const auto email = field<std::string>(body(req), "email");
        if (!throttle_.allow(req.remote_addr, clock_()))
            throw Error(ErrorCode::RateLimited, "too many recovery requests; try again later");
        auth_.recover_password(email, clock_());
        res.status = 202;
        res.set_content(kRecoverResponse, "application/json");
    }));

    s.Post("/api/reset", guarded([this, body](const Request& req, Response& res) {
        const auto b = body(req);
        auth_.reset_password(field<std::string>(b, "ticket"),
                             field<std::string>(b, "new_password"), clock_());
        send_json(res, 200, {{"status", "password_reset"}});
    }));

    // --- catalog ------------------------------------------------------------

    s.Get("/api/catalog/domains", guarded([this, principal](const Request& req, Response& res) {
        principal(req);
        send_json(res, 200, {{"domains", list_domains(store_)}});
    }));

    s.Get(R"(/api/catalog/domains/(\d+)/subdomains)",
          guarded([this, principal](const Request& req, Response& res) {
              principal(req);
              const Id id = path_id(req);
              if (!get_entity<Domain>(store_, id))
                  throw Error(ErrorCode::UnknownEntity, "unknown domain " + std::to_string(id));
              send_json(res, 200, {{"subdomains", list_subdomains(store_, id)}});
          }));

    s.Get(R"(/api/catalog/subdomains/(\d+)/tests)",
          guarded([this, principal](const Request& req, Response& res) {
              principal(req);
              const Id id = path_id(req);
              if (!get_entity<Subdomain>(store_, id))
                  throw Error(ErrorCode::UnknownEntity, "unknown subdomain " + std::to_string(id));
              json tests = json::array();
              for (const auto& t : list_tests(store_, id)) {
                  json item = t;
                  item["question_count"] = list_questions(store_, t.id).size();
                  tests.push_back(std::move(item));
              }
              send_json(res, 200, {{"tests", tests}});
          }));

    // --- sessions -----------------------------------------------------------

    s.Post("/api/sessions", guarded([this, principal, body](const Request& req, Response& res) {
        auto p = principal(req);
        const auto test_id = field<Id>(body(req), "test_id");
        auto start = engine_.start_session(p, test_id, clock_());
        auto user = get_user(store_, p.user_id);
        send_json(res, 201,
                  {{"session", start.session},
                   {"test_title", start.test_title},
                   {"warning", start.warning},
                   {"user",
                    {{"username", user->username},
                     {"name", user->name},
                     {"first_name", user->first_name}}}});
    }));

    s.Get(R"(/api/sessions/(\d+))",
          guarded([this, principal, own_session](const Request& req, Response& res) {
              auto p = principal(req);
              const Id id = path_id(req);
              own_session(p, id);
              send_json(res, 200, engine_.get_session(id));
          }));

    s.Get(R"(/api/sessions/(\d+)/question)",
          guarded([this, principal, own_session](const Request& req, Response& res) {
              auto p = principal(req);
              const Id id = path_id(req);
              own_session(p, id);
              json out = engine_.current_question(id, clock_());
              send_json(res, 200, out);
          }));

    s.Post(R"(/api/sessions/(\d+)/answer)",
           guarded([this, principal, own_session, body](const Request& req, Response& res) {
               auto p = principal(req);
               const Id id = path_id(req);
               own_session(p, id);
               const auto b = body(req);
               auto outcome = engine_.submit_answer(id, field<std::int64_t>(b, "position"),
                                                    field<Id>(b, "option_id"), clock_());
               send_json(res, 200, outcome);
           }));

    // --- results ------------------------------------------------------------

    s.Get("/api/results", guarded([this, principal](const Request& req, Response& res) {
        auto p = principal(req);
        std::int64_t limit = 20;
        if (req.has_param("limit"))
            limit = parse_id(req.get_param_value("limit"));
        if (limit < 1)
            throw Error(ErrorCode::BadRequest, "limit must be at least 1");
        limit = std::min<std::int64_t>(limit, 20);
        json results = json::array();
        for (const auto& r : list_recent_results(store_, p.user_id, limit)) {
            json item = r;
            auto test = get_entity<Test>(store_, r.test_id);
            item["test_title"] = test ? test->title : "";
            results.push_back(std::move(item));
        }
        send_json(res, 200, {{"results", results}});
    }));

    s.Get(R"(/api/results/(\d+))", guarded([this, principal](const Request& req, Response& res) {
        auto p = principal(req);
        const Id id = path_id(req);
        auto result = get_result(store_, id);
        if (!result)
            throw Error(ErrorCode::UnknownResult, "unknown result " + std::to_string(id));
        if (p.role != Role::Supervisor && result->user_id != p.user_id)
            throw Error(ErrorCode::Forbidden, "result belongs to another user");
        send_json(res, 200, engine_.result_detail(id, request_locale(req)));
    }));

    // --- administration -----------------------------------------------------

    s.Get("/api/admin/users", guarded([this, supervisor](const Request& req, Response& res) {
        send_json(res, 200, {{"users", admin_.list_users(supervisor(req))}});
    }));

    s.Put(R"(/api/admin/users/(\d+))",
          guarded([this, supervisor, body](const Request& req, Response& res) {
              auto p = supervisor(req);
              auto user = admin_.set_user_active(p, path_id(req), field<bool>(body(req), "active"));
              send_json(res, 200, user);
          }));

    s.Post("/api/admin/domains", guarded([this, supervisor, body](const Request& req, Response& res) {
        auto p = supervisor(req);
        const auto b = body(req);
        Id id = admin_.create_domain(p, Domain{0, field<std::string>(b, "name")});
        send_json(res, 201, *get_entity<Domain>(store_, id));
    }));

    s.Post("/api/admin/subdomains",
           guarded([this, supervisor, body](const Request& req, Response& res) {
               auto p = supervisor(req);
               const auto b = body(req);
               Id id = admin_.create_subdomain(
                   p, Subdomain{0, field<Id>(b, "domain_id"), field<std::string>(b, "name")});
               send_json(res, 201, *get_entity<Subdomain>(store_, id));
           }));

    s.Post("/api/admin/tests", guarded([this, supervisor, body](const Request& req, Response& res) {
        auto p = supervisor(req);
        const auto b = body(req);
        auto bundle = decode([&] { return b.get<TestBundle>(); });
        Id id = admin_.create_test(p, bundle);
        send_json(res, 201, admin_.get_test_bundle(p, id));
    }));

    s.Get(R"(/api/admin/tests/(\d+))", guarded([this, supervisor](const Request& req, Response& res) {
        send_json(res, 200, admin_.get_test_bundle(supervisor(req), path_id(req)));
    }));

    // PUT /api/admin/{domains,subdomains,tests,questions,options}/{id}
    s.Put(R"(/api/admin/(domains|subdomains|tests|questions|options)/(\d+))",
          guarded([this, supervisor, body](const Request& req, Response& res) {
              auto p = supervisor(req);
              static const std::map<std::string, EntityKind> kinds = {
                  {"domains", EntityKind::Domain},     {"subdomains", EntityKind::Subdomain},
                  {"tests", EntityKind::Test},         {"questions", EntityKind::Question},
                  {"options", EntityKind::AnswerOption}};
              auto entity = admin_.update_registration(p, kinds.at(req.matches[1].str()),
                                                       path_id(req, 2), body(req));
              json out;
              std::visit([&](const auto& e) { out = e; }, entity);
              send_json(res, 200, out);
          }));

    s.Delete(R"(/api/admin/(domains|subdomains|tests)/(\d+))",
             guarded([this, supervisor](const Request& req, Response& res) {
                 auto p = supervisor(req);
                 const auto kind = req.matches[1].str() == "domains"      ? EntityKind::Domain
                                   : req.matches[1].str() == "subdomains" ? EntityKind::Subdomain
                                                                          : EntityKind::Test;
                 auto count = admin_.delete_registration(p, kind, path_id(req, 2));
                 send_json(res, 200, {{"deleted", count}});
             }));

    s.Get("/api/admin/results", guarded([this, supervisor](const Request& req, Response& res) {
        auto p = supervisor(req);
        std::optional<Id> user_id;
        if (req.has_param("user_id"))
            user_id = parse_id(req.get_param_value("user_id"));
        json rows = json::array();
        for (const auto& [username, result] : admin_.list_all_results(p, user_id)) {
            json item = result;
            item["username"] = username;
            rows.push_back(std::move(item));
        }
        send_json(res, 200, {{"results", rows}});
    }));

    s.Delete(R"(/api/admin/results/(\d+))",
             guarded([this, supervisor](const Request& req, Response& res) {
                 auto p = supervisor(req);
                 admin_.delete_user_result(p, path_id(req));
                 send_json(res, 200, {{"status", "deleted"}});
             }));

    if (!config_.static_dir.empty() && !s.set_mount_point("/", config_.static_dir))
        throw Error(ErrorCode::ConfigError, "static_dir " + config_.static_dir + " not found");

    s.set_error_handler([](const Request& req, Response& res) {
        if (!res.body.empty())
            return;
        if (res.status == 404)
            send_error(res, ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
        else if (res.status == 400)
            send_error(res, ErrorCode::BadRequest, "malformed request");
    });
}

// ---------------------------------------------------------------------------

Service::Service(const ServerConfig& config)
    : config_(config), store_(open_store(config.store))
{
    validate_config(config_);
    if (!schema_ready(store_))
        throw Error(ErrorCode::ConfigError, "database schema missing; run `grila migrate` first");
    api_ = std::make_unique<ApiServer>(
        store_, config_, system_now, [](const UserAccount& user, const ResetTicket& ticket) {
            spdlog::info("password reset ticket for user '{}' (valid until {}): {}",
                         user.username, ticket.expires_at, ticket.ticket);
        });
}

Service::~Service()
{
    stop();
}

void Service::run()
{
    api_->bind(config_.bind_address, config_.port);
    std::thread sweeper([this] {
        std::unique_lock lock(mutex_);
        while (!stopping_) {
            wake_.wait_for(lock, std::chrono::seconds(config_.sweep_interval_seconds));
            if (stopping_)
                break;
            lock.unlock();
            try {
                if (auto n = api_->engine().expire_overdue(system_now()); n > 0)
                    spdlog::info("expired {} overdue session(s)", n);
                delete_expired_tokens(store_, system_now());
            } catch (const std::exception& e) {
                spdlog::error("session sweep failed: {}", e.what());
            }
            lock.lock();
        }
    });
    spdlog::info("serving on {}:{}", config_.bind_address, config_.port);
    api_->listen();
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    sweeper.join();
    spdlog::info("server stopped");
}

void Service::stop()
{
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    if (api_)
        api_->stop();
}

} // namespace grila
