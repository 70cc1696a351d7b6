#pragma once

#include "grila/domain_model.hpp"
#include "grila/persistence.hpp"

#include <functional>
#include <optional>
#include <string>

namespace grila {

/// Work factor for password hashing. `Minimal` exists for tests and tooling
/// on throwaway stores.
enum class HashProfile { Interactive, Moderate, Minimal };

std::optional<HashProfile> parse_hash_profile(std::string_view text);

std::string hash_password(const std::string& password, HashProfile profile);
bool verify_password(const std::string& password, const std::string& hash);

/// Random 256-bit value, hex encoded.
std::string random_token();
/// Storage key for a bearer token or reset ticket.
std::string token_digest(const std::string& token);

struct AuthToken {
    std::string token;
    Id user_id = 0;
    Timestamp expires_at = 0;
};

struct ResetTicket {
    std::string ticket;
    Id user_id = 0;
    Timestamp expires_at = 0;
};

struct Principal {
    Id user_id = 0;
    Role role = Role::Regular;
};

struct AuthConfig {
    std::int64_t token_ttl_seconds = 24 * 60 * 60;
    std::int64_t reset_ttl_seconds = 60 * 60;
    HashProfile hash_profile = HashProfile::Interactive;
};

/// Receives freshly issued reset tickets (the server writes them to its log).
using TicketSink = std::function<void(const UserAccount&, const ResetTicket&)>;

struct Registration {
    std::string username;
    std::string password;
    std::string name;
    std::string first_name;
    std::string email;
};

class AuthService {
public:
    AuthService(Store& store, AuthConfig config, TicketSink sink = {});

    /// Creates a Regular account.
    UserAccount register_user(const Registration& input, Timestamp now);
    /// The only way to obtain a Supervisor account; used by the operator CLI.
    UserAccount create_supervisor(const Registration& input, Timestamp now);

    /// Unknown user, inactive user and wrong password all fail with AuthFailed.
    AuthToken login(const std::string& username, const std::string& password, Timestamp now);
    void logout(const std::string& token);

    /// Issues a ticket when the email is known; says nothing either way.
    void recover_password(const std::string& email, Timestamp now);
    /// Consumes the ticket, sets the new password and revokes all access tokens.
    void reset_password(const std::string& ticket, const std::string& new_password, Timestamp now);

    /// `required` empty means any authenticated role. Supervisor satisfies
    /// every requirement.
    Principal authorize(const std::string& token, std::optional<Role> required, Timestamp now);

    /// Deactivation also revokes the user's tokens.
    void set_active(Id user_id, bool active);

    const AuthConfig& config() const { return config_; }

private:
    UserAccount create_account(const Registration& input, Role role, Timestamp now);

    Store& store_;
    AuthConfig config_;
    TicketSink sink_;
    std::string dummy_hash_;
};

} // namespace grila
