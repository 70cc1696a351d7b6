#include "support/fixtures.hpp"
#include "support/process.hpp"

#include "httplib.h"

#include "doctest.h"

#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <thread>

extern char** environ;

using namespace grila::testing;

namespace {

const std::string kBinary = GRILA_BINARY;

int free_port()
{
    int fd = socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    socklen_t len = sizeof(addr);
    getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    close(fd);
    return ntohs(addr.sin_port);
}

} // namespace

TEST_CASE("usage errors exit 2, help exits 0")
{
    CHECK(run_command(shell_quote(kBinary)).exit_code == 2);
    CHECK(run_command(shell_quote(kBinary) + " frobnicate").exit_code == 2);
    CHECK(run_command(shell_quote(kBinary) + " seed").exit_code == 2);
    auto help = run_command(shell_quote(kBinary) + " --help");
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("migrate") != std::string::npos);
}

TEST_CASE("migrate creates the schema once")
{
    TempDir dir;
    auto first = run_command(store_env(dir.str()) + shell_quote(kBinary) + " migrate");
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("schema ready: 10 tables (10 created, 0 existing)") != std::string::npos);
    auto second = run_command(store_env(dir.str()) + shell_quote(kBinary) + " migrate");
    CHECK(second.exit_code == 0);
    CHECK(second.output.find("(0 created, 10 existing)") != std::string::npos);
    CHECK(table_names({dir.str(), "tests"}).size() == 10);
}

TEST_CASE("startup errors are reported with exit code 1")
{
    TempDir dir;
    auto unreachable =
        run_command(store_env((dir.path() / "absent").string()) + shell_quote(kBinary) + " serve");
    CHECK(unreachable.exit_code == 1);
    CHECK(unreachable.output.find("Connection error") != std::string::npos);

    auto unknown = run_command(store_env(dir.str(), "nosuchdb") + shell_quote(kBinary) + " serve");
    CHECK(unknown.exit_code == 1);
    CHECK(unknown.output.find("Database selection Error") != std::string::npos);

    // Database file present but never migrated.
    std::ofstream(dir.path() / "empty.db").close();
    auto unmigrated = run_command(store_env(dir.str(), "empty") + shell_quote(kBinary) + " serve");
    CHECK(unmigrated.exit_code == 1);
    CHECK(unmigrated.output.find("migrate") != std::string::npos);

    auto bad_config = run_command(shell_quote(kBinary) + " --config " +
                                  shell_quote((dir.path() / "missing.json").string()) + " migrate");
    CHECK(bad_config.exit_code == 1);
}

TEST_CASE("seed and create-supervisor")
{
    TempDir dir;
    const auto env = store_env(dir.str());
    REQUIRE(run_command(env + shell_quote(kBinary) + " migrate").exit_code == 0);

    auto seeded = run_command(env + shell_quote(kBinary) + " seed " + shell_quote(GRILA_SAMPLE_CATALOG));
    CHECK(seeded.exit_code == 0);
    CHECK(seeded.output.find("2 test(s), 11 question(s)") != std::string::npos);

    auto broken_path = (dir.path() / "broken.json").string();
    std::ofstream(broken_path) << "{ not json";
    CHECK(run_command(env + shell_quote(kBinary) + " seed " + shell_quote(broken_path)).exit_code == 1);

    auto created = run_command("printf 'parola\\n' | " + env + shell_quote(kBinary) +
                               " create-supervisor boss boss@example.org --name Pop");
    CHECK(created.exit_code == 0);
    CHECK(created.output.find("supervisor boss created") != std::string::npos);
    auto duplicate = run_command("printf 'parola\\n' | " + env + shell_quote(kBinary) +
                                 " create-supervisor boss other@example.org");
    CHECK(duplicate.exit_code == 1);
    auto empty = run_command("printf '\\n' | " + env + shell_quote(kBinary) +
                             " create-supervisor chief chief@example.org");
    CHECK(empty.exit_code == 1);

    auto store = grila::open_store({dir.str(), "tests"});
    auto boss = grila::find_user_by_username(store, "boss");
    REQUIRE(boss);
    CHECK(boss->role == grila::Role::Supervisor);
    CHECK(boss->name == "Pop");
    CHECK(boss->first_name == "boss");
    CHECK(grila::verify_password("parola", boss->password_hash));
}

TEST_CASE("serve answers requests and stops on SIGTERM")
{
    TempDir dir;
    REQUIRE(run_command(store_env(dir.str()) + shell_quote(kBinary) + " migrate").exit_code == 0);
    const int port = free_port();

    setenv("GRILA_STORE_LOCATION", dir.str().c_str(), 1);
    setenv("GRILA_PORT", std::to_string(port).c_str(), 1);
    setenv("GRILA_PASSWORD_HASH_PROFILE", "minimal", 1);
    std::vector<char*> argv = {const_cast<char*>(kBinary.c_str()), const_cast<char*>("serve"),
                               nullptr};
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO,
                                     (dir.path() / "serve.log").c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0644);
    pid_t pid = 0;
    REQUIRE(posix_spawn(&pid, kBinary.c_str(), &actions, nullptr, argv.data(), environ) == 0);
    posix_spawn_file_actions_destroy(&actions);
    unsetenv("GRILA_STORE_LOCATION");
    unsetenv("GRILA_PORT");
    unsetenv("GRILA_PASSWORD_HASH_PROFILE");

    httplib::Client client("127.0.0.1", port);
    bool healthy = false;
    for (int attempt = 0; attempt < 100 && !healthy; ++attempt) {
        auto res = client.Get("/api/health");
        healthy = res && res->status == 200;
        if (!healthy)
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    CHECK(healthy);
    auto unauth = client.Get("/api/me");
    REQUIRE(unauth);
    CHECK(unauth->status == 401);

    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
}
