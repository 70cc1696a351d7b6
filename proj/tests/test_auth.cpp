#include "grila/auth.hpp"
#include "grila/error.hpp"

#include "support/fixtures.hpp"

#include "doctest.h"

#include <set>

using namespace grila;
using namespace grila::testing;

namespace {

struct AuthFixture : Fixture {
    std::vector<std::pair<UserAccount, ResetTicket>> tickets;
    AuthService auth{store, fast_auth_config(),
                     [this](const UserAccount& u, const ResetTicket& t) { tickets.emplace_back(u, t); }};
};

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::BadRequest;
}

Registration reg(const std::string& username, const std::string& email)
{
    return {username, "secret", "Popescu", "Ana", email};
}

} // namespace

TEST_CASE("password hashes verify and differ per call")
{
    auto a = hash_password("parola", HashProfile::Minimal);
    auto b = hash_password("parola", HashProfile::Minimal);
    CHECK(a != b);
    CHECK(a.rfind("$argon2id$", 0) == 0);
    CHECK(verify_password("parola", a));
    CHECK_FALSE(verify_password("Parola", a));
    CHECK_FALSE(verify_password("parola", "not a hash"));
}

TEST_CASE("tokens are random and digests are stable")
{
    std::set<std::string> seen;
    for (int i = 0; i < 100; ++i) {
        auto t = random_token();
        CHECK(t.size() == 64);
        seen.insert(t);
    }
    CHECK(seen.size() == 100);
    CHECK(token_digest("abc") == token_digest("abc"));
    CHECK(token_digest("abc") != token_digest("abd"));
    CHECK(token_digest("abc") != "abc");
}

TEST_CASE("registration creates a regular account and stores no plaintext")
{
    AuthFixture f;
    auto user = f.auth.register_user(reg("ana", "ana@example.org"), 1000);
    CHECK(user.role == Role::Regular);
    CHECK(user.active);
    CHECK(user.id > 0);
    auto stored = get_user(f.store, user.id);
    REQUIRE(stored);
    CHECK(stored->password_hash != "secret");
    CHECK(store_digest(f.config).find("secret") == std::string::npos);
}

TEST_CASE("registration rejects duplicates and missing fields")
{
    AuthFixture f;
    f.auth.register_user(reg("ana", "ana@example.org"), 1000);
    CHECK(code_of([&] { f.auth.register_user(reg("ana", "other@example.org"), 1000); }) ==
          ErrorCode::DuplicateIdentity);
    CHECK(code_of([&] { f.auth.register_user(reg("maria", "ANA@example.org"), 1000); }) ==
          ErrorCode::DuplicateIdentity);

    for (int field = 0; field < 5; ++field) {
        auto r = reg("x" + std::to_string(field), "x" + std::to_string(field) + "@e.org");
        std::string* fields[] = {&r.username, &r.password, &r.name, &r.first_name, &r.email};
        *fields[field] = "";
        CHECK(code_of([&] { f.auth.register_user(r, 1000); }) == ErrorCode::WeakInput);
    }
    CHECK(list_users(f.store).size() == 1);
}

TEST_CASE("login, authorize and logout")
{
    AuthFixture f;
    auto user = f.auth.register_user(reg("ana", "ana@example.org"), 1000);
    auto token = f.auth.login("ana", "secret", 2000);
    CHECK(token.user_id == user.id);
    CHECK(token.expires_at == 2000 + 86400);

    auto p = f.auth.authorize(token.token, std::nullopt, 2001);
    CHECK(p.user_id == user.id);
    CHECK(p.role == Role::Regular);
    CHECK(code_of([&] { f.auth.authorize(token.token, Role::Supervisor, 2001); }) ==
          ErrorCode::Forbidden);

    // Expiry is exclusive at the stored instant.
    CHECK(code_of([&] { f.auth.authorize(token.token, std::nullopt, token.expires_at); }) ==
          ErrorCode::Unauthenticated);

    f.auth.logout(token.token);
    CHECK(code_of([&] { f.auth.authorize(token.token, std::nullopt, 2002); }) ==
          ErrorCode::Unauthenticated);
    CHECK(code_of([&] { f.auth.authorize("", std::nullopt, 2002); }) == ErrorCode::Unauthenticated);
}

TEST_CASE("failed logins are indistinguishable")
{
    AuthFixture f;
    f.auth.register_user(reg("ana", "ana@example.org"), 1000);
    std::string wrong_password, unknown_user;
    try {
        f.auth.login("ana", "wrong", 1000);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AuthFailed);
        wrong_password = e.what();
    }
    try {
        f.auth.login("nobody", "secret", 1000);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AuthFailed);
        unknown_user = e.what();
    }
    CHECK_FALSE(wrong_password.empty());
    CHECK(wrong_password == unknown_user);
}

TEST_CASE("supervisors pass every role check")
{
    AuthFixture f;
    make_supervisor(f.auth, "boss");
    auto token = f.auth.login("boss", "pw-boss", 1000);
    CHECK(f.auth.authorize(token.token, Role::Supervisor, 1000).role == Role::Supervisor);
    CHECK(f.auth.authorize(token.token, Role::Regular, 1000).role == Role::Supervisor);
}

TEST_CASE("password recovery issues a single-use ticket")
{
    AuthFixture f;
    auto user = f.auth.register_user(reg("ana", "ana@example.org"), 1000);
    auto old_token = f.auth.login("ana", "secret", 1000);

    f.auth.recover_password("nobody@example.org", 1000);
    CHECK(f.tickets.empty());

    f.auth.recover_password("ana@example.org", 1000);
    REQUIRE(f.tickets.size() == 1);
    CHECK(f.tickets[0].first.id == user.id);
    const auto ticket = f.tickets[0].second.ticket;

    f.auth.reset_password(ticket, "new-secret", 1100);
    CHECK(code_of([&] { f.auth.login("ana", "secret", 1100); }) == ErrorCode::AuthFailed);
    CHECK(f.auth.login("ana", "new-secret", 1100).user_id == user.id);
    CHECK(code_of([&] { f.auth.authorize(old_token.token, std::nullopt, 1100); }) ==
          ErrorCode::Unauthenticated);
    CHECK(code_of([&] { f.auth.reset_password(ticket, "again", 1101); }) ==
          ErrorCode::InvalidTicket);
}

TEST_CASE("reset tickets expire and are replaced by newer ones")
{
    AuthFixture f;
    f.auth.register_user(reg("ana", "ana@example.org"), 1000);
    f.auth.recover_password("ana@example.org", 1000);
    f.auth.recover_password("ana@example.org", 1010);
    REQUIRE(f.tickets.size() == 2);
    CHECK(code_of([&] { f.auth.reset_password(f.tickets[0].second.ticket, "x", 1020); }) ==
          ErrorCode::InvalidTicket);
    CHECK(code_of([&] { f.auth.reset_password(f.tickets[1].second.ticket, "x", 1010 + 3600); }) ==
          ErrorCode::InvalidTicket);
    CHECK(code_of([&] { f.auth.reset_password("garbage", "x", 1020); }) ==
          ErrorCode::InvalidTicket);
}

TEST_CASE("deactivated accounts cannot log in and lose their tokens")
{
    AuthFixture f;
    auto user = f.auth.register_user(reg("ana", "ana@example.org"), 1000);
    auto token = f.auth.login("ana", "secret", 1000);
    f.auth.set_active(user.id, false);
    CHECK(code_of([&] { f.auth.authorize(token.token, std::nullopt, 1001); }) ==
          ErrorCode::Unauthenticated);
    CHECK(code_of([&] { f.auth.login("ana", "secret", 1001); }) == ErrorCode::AuthFailed);
    f.auth.recover_password("ana@example.org", 1001);
    CHECK(f.tickets.empty());

    f.auth.set_active(user.id, true);
    CHECK(f.auth.login("ana", "secret", 1002).user_id == user.id);
    CHECK(code_of([&] { f.auth.set_active(9999, false); }) == ErrorCode::UnknownEntity);
}
