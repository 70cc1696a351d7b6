#include "grila/auth.hpp"

#include "grila/error.hpp"

#include <sodium.h>

#include <array>
#include <mutex>

namespace grila {

namespace {

void ensure_sodium()
{
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0)
            throw Error(ErrorCode::StorageError, "libsodium initialisation failed");
    });
}

std::string to_hex(const unsigned char* data, std::size_t size)
{
    std::string out(size * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), data, size);
    out.resize(size * 2);
    return out;
}

bool blank(const std::string& s)
{
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

} // namespace

std::optional<HashProfile> parse_hash_profile(std::string_view text)
{
    if (text == "interactive")
        return HashProfile::Interactive;
    if (text == "moderate")
        return HashProfile::Moderate;
    if (text == "minimal")
        return HashProfile::Minimal;
    return std::nullopt;
}

std::string hash_password(const std::string& password, HashProfile profile)
{
    ensure_sodium();
    unsigned long long ops = crypto_pwhash_OPSLIMIT_INTERACTIVE;
    std::size_t mem = crypto_pwhash_MEMLIMIT_INTERACTIVE;
    if (profile == HashProfile::Moderate) {
        ops = crypto_pwhash_OPSLIMIT_MODERATE;
        mem = crypto_pwhash_MEMLIMIT_MODERATE;
    } else if (profile == HashProfile::Minimal) {
        ops = crypto_pwhash_OPSLIMIT_MIN;
        mem = crypto_pwhash_MEMLIMIT_MIN;
    }
    std::array<char, crypto_pwhash_STRBYTES> out{};
    if (crypto_pwhash_str(out.data(), password.data(), password.size(), ops, mem) != 0)
        throw Error(ErrorCode::StorageError, "password hashing ran out of memory");
    return out.data();
}

bool verify_password(const std::string& password, const std::string& hash)
{
    ensure_sodium();
    return crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
}

std::string random_token()
{
    ensure_sodium();
    std::array<unsigned char, 32> bytes{};
    randombytes_buf(bytes.data(), bytes.size());
    return to_hex(bytes.data(), bytes.size());
}

std::string token_digest(const std::string& token)
{
    ensure_sodium();
    std::array<unsigned char, crypto_generichash_BYTES> out{};
    crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(token.data()),
                       token.size(), nullptr, 0);
    return to_hex(out.data(), out.size());
}

AuthService::AuthService(Store& store, AuthConfig config, TicketSink sink)
    : store_(store), config_(config), sink_(std::move(sink))
{
    // Verified against when the username is unknown, so both failure paths
    // cost one hash verification.
    dummy_hash_ = hash_password(random_token(), config_.hash_profile);
}

UserAccount AuthService::create_account(const Registration& input, Role role, Timestamp now)
{
    if (blank(input.username) || input.password.empty() || blank(input.name) ||
        blank(input.first_name) || blank(input.email)) {
        throw Error(ErrorCode::WeakInput,
                    "username, password, name, first name and email are required");
    }

    UserAccount user;
    user.username = input.username;
    user.name = input.name;
    user.first_name = input.first_name;
    user.email = input.email;
    user.role = role;
    user.created_at = now;
    user.password_hash = hash_password(input.password, config_.hash_profile);

    store_.transaction([&] {
        if (find_user_by_username(store_, user.username) || find_user_by_email(store_, user.email))
            throw Error(ErrorCode::DuplicateIdentity, "username or email already registered");
        try {
            user.id = insert_user(store_, user);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ConstraintError)
                throw Error(ErrorCode::DuplicateIdentity, "username or email already registered");
            throw;
        }
    });
    return user;
}

UserAccount AuthService::register_user(const Registration& input, Timestamp now)
{
    return create_account(input, Role::Regular, now);
}

UserAccount AuthService::create_supervisor(const Registration& input, Timestamp now)
{
    return create_account(input, Role::Supervisor, now);
}

AuthToken AuthService::login(const std::string& username, const std::string& password,
                             Timestamp now)
{
    auto user = find_user_by_username(store_, username);
    if (!user) {
        verify_password(password, dummy_hash_);
        throw Error(ErrorCode::AuthFailed, "invalid credentials");
    }
    if (!verify_password(password, user->password_hash) || !user->active)
        throw Error(ErrorCode::AuthFailed, "invalid credentials");

    AuthToken token{random_token(), user->id, now + config_.token_ttl_seconds};
    insert_token(store_, {token_digest(token.token), user->id, TokenPurpose::Access,
                          token.expires_at});
    return token;
}

void AuthService::logout(const std::string& token)
{
    delete_token(store_, token_digest(token));
}

void AuthService::recover_password(const std::string& email, Timestamp now)
{
    std::optional<std::pair<UserAccount, ResetTicket>> issued;
    store_.transaction([&] {
        auto user = find_user_by_email(store_, email);
        if (!user || !user->active)
            return;
        delete_user_tokens(store_, user->id, TokenPurpose::Reset);
        ResetTicket ticket{random_token(), user->id, now + config_.reset_ttl_seconds};
        insert_token(store_, {token_digest(ticket.ticket), user->id, TokenPurpose::Reset,
                              ticket.expires_at});
        issued.emplace(*user, ticket);
    });
    if (issued && sink_)
        sink_(issued->first, issued->second);
}

void AuthService::reset_password(const std::string& ticket, const std::string& new_password,
                                 Timestamp now)
{
    if (new_password.empty())
        throw Error(ErrorCode::WeakInput, "new password must not be empty");
    const auto hash = hash_password(new_password, config_.hash_profile);
    store_.transaction([&] {
        const auto digest = token_digest(ticket);
        auto row = find_token(store_, digest, TokenPurpose::Reset);
        if (!row || row->expires_at <= now) {
            if (row)
                delete_token(store_, digest);
            throw Error(ErrorCode::InvalidTicket, "reset ticket is unknown, expired or used");
        }
        delete_token(store_, digest);
        set_password_hash(store_, row->user_id, hash);
        delete_user_tokens(store_, row->user_id, TokenPurpose::Access);
    });
}

Principal AuthService::authorize(const std::string& token, std::optional<Role> required,
                                 Timestamp now)
{
    if (token.empty())
        throw Error(ErrorCode::Unauthenticated, "authentication required");
    auto row = find_token(store_, token_digest(token), TokenPurpose::Access);
    if (!row || row->expires_at <= now)
        throw Error(ErrorCode::Unauthenticated, "token is invalid or expired");
    auto user = get_user(store_, row->user_id);
    if (!user || !user->active)
        throw Error(ErrorCode::Unauthenticated, "token is invalid or expired");
    if (required == Role::Supervisor && user->role != Role::Supervisor)
        throw Error(ErrorCode::Forbidden, "supervisor role required");
    return {user->id, user->role};
}

void AuthService::set_active(Id user_id, bool active)
{
    store_.transaction([&] {
        if (!set_user_active(store_, user_id, active))
            throw Error(ErrorCode::UnknownEntity, "unknown user " + std::to_string(user_id));
        if (!active)
            delete_user_tokens(store_, user_id, TokenPurpose::Access);
    });
}

} // namespace grila
