#pragma once

#include "grila/domain_model.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace grila {

/// `location` is a directory; the database named `database_name` lives in it
/// as `<database_name>.db`.
struct StoreConfig {
    std::string location;
    std::string database_name;
};

enum class OpenMode {
    ExistingOnly,     // unknown database name is a SelectionError
    CreateIfMissing,  // used by `migrate`
};

/// Handle to an open, selected database. All operations run inside a
/// transaction; calls from several threads are serialized.
class Store {
public:
    Store(Store&&) noexcept;
    Store& operator=(Store&&) noexcept;
    ~Store();

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Runs `fn` as one transaction. Nested calls join the enclosing
    /// transaction; an exception anywhere rolls back the outermost one.
    void transaction(const std::function<void()>& fn);

    template <typename F>
    auto transact(F&& fn) -> decltype(fn())
    {
        if constexpr (std::is_void_v<decltype(fn())>) {
            transaction([&] { fn(); });
        } else {
            std::optional<decltype(fn())> out;
            transaction([&] { out.emplace(fn()); });
            return std::move(*out);
        }
    }

    struct Impl;
    Impl& impl() { return *impl_; }

private:
    explicit Store(std::unique_ptr<Impl> impl);
    friend Store open_store(const StoreConfig&, OpenMode);

    std::unique_ptr<Impl> impl_;
};

/// Throws Error{ConnectionError, "Connection error"} when the location is not
/// reachable and Error{SelectionError, "Database selection Error"} when the
/// database does not exist (and `mode` is ExistingOnly).
Store open_store(const StoreConfig& config, OpenMode mode = OpenMode::ExistingOnly);

// ---------------------------------------------------------------------------
// Schema

inline constexpr const char* kTableNames[] = {
    "users",          "domains",  "subdomains",      "tests",   "questions",
    "answer_options", "sessions", "session_answers", "results", "auth_tokens",
};

struct SchemaReport {
    std::vector<std::string> created;
    std::vector<std::string> existing;
};

SchemaReport init_schema(Store& store);
bool schema_ready(Store& store);
/// Row count per table, for all ten tables.
std::map<std::string, std::int64_t> row_counts(Store& store);

// ---------------------------------------------------------------------------
// Catalog

/// Insert when `id` is 0 or unknown, otherwise update. Returns the stored id.
Id put_entity(Store& store, const Domain& entity);
Id put_entity(Store& store, const Subdomain& entity);
Id put_entity(Store& store, const Test& entity);
Id put_entity(Store& store, const Question& entity);
Id put_entity(Store& store, const AnswerOption& entity);

template <typename T>
std::optional<T> get_entity(Store& store, Id id);

template <> std::optional<Domain> get_entity<Domain>(Store&, Id);
template <> std::optional<Subdomain> get_entity<Subdomain>(Store&, Id);
template <> std::optional<Test> get_entity<Test>(Store&, Id);
template <> std::optional<Question> get_entity<Question>(Store&, Id);
template <> std::optional<AnswerOption> get_entity<AnswerOption>(Store&, Id);

/// Deletes the entity and everything below it in the catalog, including
/// sessions, answers and results hanging off removed tests. Returns the total
/// number of rows removed (0 when the id is unknown).
std::int64_t delete_entity(Store& store, EntityKind kind, Id id);

std::vector<Domain> list_domains(Store& store);
std::vector<Subdomain> list_subdomains(Store& store, Id domain_id);  // by name
std::vector<Test> list_tests(Store& store, Id subdomain_id);         // by title, ordinal
std::vector<Question> list_questions(Store& store, Id test_id);      // by position
std::vector<AnswerOption> list_options(Store& store, Id question_id); // by id
/// All options of all questions of a test.
std::vector<AnswerOption> list_test_options(Store& store, Id test_id);

// ---------------------------------------------------------------------------
// Accounts and tokens

Id insert_user(Store& store, const UserAccount& user);
std::optional<UserAccount> get_user(Store& store, Id id);
std::optional<UserAccount> find_user_by_username(Store& store, const std::string& username);
std::optional<UserAccount> find_user_by_email(Store& store, const std::string& email);
std::vector<UserAccount> list_users(Store& store);
void set_password_hash(Store& store, Id user_id, const std::string& password_hash);
bool set_user_active(Store& store, Id user_id, bool active);

enum class TokenPurpose { Access, Reset };

struct TokenRow {
    std::string digest;  // hash of the bearer string; the raw value is never stored
    Id user_id = 0;
    TokenPurpose purpose = TokenPurpose::Access;
    Timestamp expires_at = 0;
};

void insert_token(Store& store, const TokenRow& token);
std::optional<TokenRow> find_token(Store& store, const std::string& digest, TokenPurpose purpose);
bool delete_token(Store& store, const std::string& digest);
std::int64_t delete_user_tokens(Store& store, Id user_id, TokenPurpose purpose);
std::int64_t delete_expired_tokens(Store& store, Timestamp now);

// ---------------------------------------------------------------------------
// Sessions

enum class SessionState { Active, Completed, Expired };

std::string_view to_string(SessionState state);

struct SessionRow {
    Id id = 0;
    Id user_id = 0;
    Id test_id = 0;
    Timestamp started_at = 0;
    Timestamp deadline = 0;
    std::int64_t cursor = 1;
    SessionState state = SessionState::Active;
};

Id insert_session(Store& store, const SessionRow& session);
std::optional<SessionRow> get_session(Store& store, Id id);
std::optional<SessionRow> find_active_session(Store& store, Id user_id);
std::vector<Id> list_overdue_sessions(Store& store, Timestamp now);
void update_session(Store& store, Id id, std::int64_t cursor, SessionState state);

void insert_answer(Store& store, const AnswerRecord& record);
std::vector<AnswerRecord> list_answers(Store& store, Id session_id);  // in answer order

// ---------------------------------------------------------------------------
// Results

/// Persists the result and its records in one transaction. Records already
/// stored for the session are kept. Rejects results breaking the TestResult
/// invariants, and records that disagree with the result's counts.
Id save_result(Store& store, const TestResult& result, const std::vector<AnswerRecord>& records);
std::optional<TestResult> get_result(Store& store, Id id);
/// Newest first by finished_at, at most `limit`.
std::vector<TestResult> list_recent_results(Store& store, Id user_id, std::int64_t limit);
/// Newest first, optionally for one user. Pairs each result with its username.
std::vector<std::pair<std::string, TestResult>> list_all_results(Store& store,
                                                                 std::optional<Id> user_id);
/// Removes the result, its session and that session's answers.
/// Returns the number of rows removed.
std::int64_t delete_result(Store& store, Id id);

} // namespace grila
