// grila: operator CLI for the online test service.
//
//   grila [--config FILE] migrate
//   grila [--config FILE] seed FILE
//   grila [--config FILE] create-supervisor USERNAME EMAIL [--name N] [--first-name F]
//   grila [--config FILE] serve
//
// Exit codes: 0 success, 1 operational failure, 2 usage error.

#include "grila/admin_service.hpp"
#include "grila/auth.hpp"
#include "grila/config.hpp"
#include "grila/error.hpp"
#include "grila/http_api.hpp"
#include "grila/persistence.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <termios.h>
#include <thread>
#include <unistd.h>

namespace {

using namespace grila;

int run_migrate(const ServerConfig& config)
{
    auto store = open_store(config.store, OpenMode::CreateIfMissing);
    auto report = init_schema(store);
    std::cout << "schema ready: " << report.created.size() + report.existing.size()
              << " tables (" << report.created.size() << " created, " << report.existing.size()
              << " existing)\n";
    return 0;
}

Store open_migrated(const ServerConfig& config)
{
    auto store = open_store(config.store);
    if (!schema_ready(store))
        throw Error(ErrorCode::ConfigError, "database schema missing; run `grila migrate` first");
    return store;
}

int run_seed(const ServerConfig& config, const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::BadRequest, "cannot read seed file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto tree = nlohmann::json::parse(buffer.str(), nullptr, false);
    if (tree.is_discarded())
        throw Error(ErrorCode::BadRequest, "seed file " + path + " is not valid JSON");

    auto store = open_migrated(config);
    auto report = import_seed(store, tree);
    std::cout << "imported domain " << report.domain_id << ": " << report.subdomains
              << " new subdomain(s), " << report.tests << " test(s), " << report.questions
              << " question(s), " << report.options << " option(s)\n";
    return 0;
}

std::string read_password()
{
    if (!isatty(STDIN_FILENO)) {
        std::string line;
        std::getline(std::cin, line);
        return line;
    }

    termios saved{};
    tcgetattr(STDIN_FILENO, &saved);
    termios quiet = saved;
    quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
    auto prompt = [&](const char* text) {
        std::cerr << text << std::flush;
        tcsetattr(STDIN_FILENO, TCSANOW, &quiet);
        std::string line;
        std::getline(std::cin, line);
        tcsetattr(STDIN_FILENO, TCSANOW, &saved);
        std::cerr << '\n';
        return line;
    };
    auto first = prompt("Password: ");
    if (prompt("Repeat password: ") != first)
        throw Error(ErrorCode::WeakInput, "passwords do not match");
    return first;
}

int run_create_supervisor(const ServerConfig& config, const Registration& partial)
{
    auto store = open_migrated(config);
    Registration input = partial;
    input.password = read_password();
    AuthService auth(store,
                     AuthConfig{config.token_ttl_seconds, config.reset_ticket_ttl_seconds,
                                *parse_hash_profile(config.password_hash_profile)});
    auto user = auth.create_supervisor(input, system_now());
    std::cout << "supervisor " << user.username << " created (id " << user.id << ")\n";
    return 0;
}

int run_serve(const ServerConfig& config)
{
    // Signals are handled by a dedicated thread; block them before any other
    // thread is started so every thread inherits the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGUSR1);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Service service(config);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        if (sig != SIGUSR1) {
            spdlog::info("received signal {}, shutting down", sig);
            service.stop();
        }
    });
    auto release_waiter = [&] {
        pthread_kill(waiter.native_handle(), SIGUSR1);
        waiter.join();
    };
    try {
        service.run();
    } catch (...) {
        release_waiter();
        throw;
    }
    release_waiter();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("grila"));

    CLI::App app{"Online multiple-choice test service"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    auto* migrate = app.add_subcommand("migrate", "Create the database and its tables");

    auto* seed = app.add_subcommand("seed", "Import a catalog tree from a JSON file");
    std::string seed_path;
    seed->add_option("file", seed_path, "Seed file")->required();

    auto* supervisor =
        app.add_subcommand("create-supervisor", "Create a supervisor account (reads the password)");
    Registration registration;
    supervisor->add_option("username", registration.username)->required();
    supervisor->add_option("email", registration.email)->required();
    supervisor->add_option("--name", registration.name, "Family name (defaults to username)");
    supervisor->add_option("--first-name", registration.first_name,
                           "Given name (defaults to username)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        const auto config = load_config(config_path);
        validate_config(config);
        if (*migrate)
            return run_migrate(config);
        if (*seed)
            return run_seed(config, seed_path);
        if (*supervisor) {
            if (registration.name.empty())
                registration.name = registration.username;
            if (registration.first_name.empty())
                registration.first_name = registration.username;
            return run_create_supervisor(config, registration);
        }
        if (*serve)
            return run_serve(config);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 2;
}
