#pragma once

#include "grila/admin_service.hpp"
#include "grila/auth.hpp"
#include "grila/persistence.hpp"
#include "grila/test_engine.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace grila::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

/// A migrated store in its own temporary directory.
struct Fixture {
    TempDir dir;
    StoreConfig config{dir.str(), "tests"};
    Store store = make();

    Store make();
};

AuthConfig fast_auth_config();

/// Ids of a test created directly through persistence. `key[q]` is the index
/// of the correct option of question q.
struct SeededTest {
    Id domain_id = 0;
    Id subdomain_id = 0;
    Id test_id = 0;
    std::vector<Id> question_ids;
    std::vector<std::vector<Id>> option_ids;
    std::vector<int> key;
};

SeededTest seed_test(Store& store, int questions, int options, std::int64_t time_limit,
                     const std::vector<int>& key = {}, Id subdomain_id = 0);

/// Bundle with `questions` questions of `options` options; the correct option
/// of question q is `key[q]` (default 0).
TestBundle make_bundle(Id subdomain_id, int questions, int options,
                       const std::vector<int>& key = {});

Principal make_user(AuthService& auth, const std::string& username, Timestamp now = 1000);
Principal make_supervisor(AuthService& auth, const std::string& username, Timestamp now = 1000);

/// Every row of every table, rendered as text, read over an independent
/// SQLite connection.
std::string store_digest(const StoreConfig& config);

/// Foreign-key edges as "table.column->parent", read from the schema.
std::vector<std::string> foreign_key_edges(const StoreConfig& config);
std::vector<std::string> table_names(const StoreConfig& config);

} // namespace grila::testing
