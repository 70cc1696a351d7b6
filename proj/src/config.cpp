#include "grila/config.hpp"

#include "grila/auth.hpp"
#include "grila/error.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace grila {

using json = nlohmann::json;

json to_json_value(const ServerConfig& c)
{
    json links = json::array();
    for (const auto& link : c.education_links)
        links.push_back({{"label", link.label}, {"url", link.url}});
    return {
        {"bind_address", c.bind_address},
        {"port", c.port},
        {"store", {{"location", c.store.location}, {"database_name", c.store.database_name}}},
        {"token_ttl_seconds", c.token_ttl_seconds},
        {"reset_ticket_ttl_seconds", c.reset_ticket_ttl_seconds},
        {"password_hash_profile", c.password_hash_profile},
        {"static_dir", c.static_dir},
        {"education_links", std::move(links)},
        {"sweep_interval_seconds", c.sweep_interval_seconds},
        {"recovery_requests_per_window", c.recovery_requests_per_window},
        {"recovery_window_seconds", c.recovery_window_seconds},
    };
}

ServerConfig config_from_json(const json& j)
{
    try {
        ServerConfig c;
        c.bind_address = j.at("bind_address").get<std::string>();
        c.port = j.at("port").get<int>();
        c.store.location = j.at("store").at("location").get<std::string>();
        c.store.database_name = j.at("store").at("database_name").get<std::string>();
        c.token_ttl_seconds = j.at("token_ttl_seconds").get<std::int64_t>();
        c.reset_ticket_ttl_seconds = j.at("reset_ticket_ttl_seconds").get<std::int64_t>();
        c.password_hash_profile = j.at("password_hash_profile").get<std::string>();
        c.static_dir = j.at("static_dir").get<std::string>();
        for (const auto& link : j.at("education_links"))
            c.education_links.push_back(
                {link.at("label").get<std::string>(), link.at("url").get<std::string>()});
        c.sweep_interval_seconds = j.at("sweep_interval_seconds").get<std::int64_t>();
        c.recovery_requests_per_window = j.at("recovery_requests_per_window").get<std::int64_t>();
        c.recovery_window_seconds = j.at("recovery_window_seconds").get<std::int64_t>();
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("invalid configuration: ") + e.what());
    }
}

void validate_config(const ServerConfig& c)
{
    auto fail = [](const std::string& message) {
        throw Error(ErrorCode::ConfigError, "invalid configuration: " + message);
    };
    if (c.port < 1 || c.port > 65535)
        fail("port must be in [1, 65535]");
    if (c.token_ttl_seconds < 60)
        fail("token_ttl_seconds must be at least 60");
    if (c.reset_ticket_ttl_seconds < 60)
        fail("reset_ticket_ttl_seconds must be at least 60");
    if (c.store.location.empty() || c.store.database_name.empty())
        fail("store.location and store.database_name are required");
    if (!parse_hash_profile(c.password_hash_profile))
        fail("password_hash_profile must be interactive, moderate or minimal");
    if (c.sweep_interval_seconds < 1)
        fail("sweep_interval_seconds must be positive");
    if (c.recovery_requests_per_window < 1 || c.recovery_window_seconds < 1)
        fail("recovery throttle settings must be positive");
}

std::optional<std::string> process_env(const std::string& name)
{
    if (const char* value = std::getenv(name.c_str()))
        return std::string(value);
    return std::nullopt;
}

std::string env_name(const std::vector<std::string>& path)
{
    std::string name = "GRILA";
    for (const auto& part : path) {
        name += '_';
        for (char c : part)
            name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

namespace {

void apply_env(json& node, std::vector<std::string>& path, const EnvLookup& env)
{
    for (auto it = node.begin(); it != node.end(); ++it) {
        path.push_back(it.key());
        if (it->is_object()) {
            apply_env(*it, path, env);
        } else if (auto value = env(env_name(path))) {
            const auto name = env_name(path);
            try {
                if (it->is_string())
                    *it = *value;
                else if (it->is_number_integer())
                    *it = std::stoll(*value);
                else
                    *it = json::parse(*value);
            } catch (const std::exception&) {
                throw Error(ErrorCode::ConfigError, "invalid value in " + name);
            }
        }
        path.pop_back();
    }
}

} // namespace

ServerConfig load_config(const std::string& path, const EnvLookup& env)
{
    json merged = to_json_value(ServerConfig{});
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in)
            throw Error(ErrorCode::ConfigError, "cannot read config file " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        auto file = json::parse(buffer.str(), nullptr, false);
        if (file.is_discarded() || !file.is_object())
            throw Error(ErrorCode::ConfigError, "config file " + path + " is not a JSON object");
        merged.merge_patch(file);
    }
    std::vector<std::string> key_path;
    apply_env(merged, key_path, env);
    return config_from_json(merged);
}

} // namespace grila
