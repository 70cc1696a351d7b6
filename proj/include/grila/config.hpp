#pragma once

#include "grila/persistence.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace grila {

struct EducationLink {
    std::string label;
    std::string url;
};

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;
    StoreConfig store{".", "tests"};
    std::int64_t token_ttl_seconds = 24 * 60 * 60;
    std::int64_t reset_ticket_ttl_seconds = 60 * 60;
    std::string password_hash_profile = "interactive";
    /// Directory with the built browser UI; empty disables static serving.
    std::string static_dir;
    std::vector<EducationLink> education_links;
    std::int64_t sweep_interval_seconds = 30;
    std::int64_t recovery_requests_per_window = 5;
    std::int64_t recovery_window_seconds = 15 * 60;
};

nlohmann::json to_json_value(const ServerConfig& config);
ServerConfig config_from_json(const nlohmann::json& j);

/// Port in [1, 65535], token TTL >= 60, known hash profile, nonempty store
/// fields. Throws Error{ConfigError}.
void validate_config(const ServerConfig& config);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Environment variable for a config field path, e.g. {"store", "location"}
/// maps to GRILA_STORE_LOCATION.
std::string env_name(const std::vector<std::string>& path);

/// Reads the JSON file at `path` (defaults when empty), then lets
/// environment variables override individual fields. Array fields take a
/// JSON value from the environment.
ServerConfig load_config(const std::string& path, const EnvLookup& env = process_env);

} // namespace grila
