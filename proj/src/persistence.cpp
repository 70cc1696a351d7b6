#include "grila/persistence.hpp"

#include "grila/error.hpp"
#include "sqlite.hpp"

#include <filesystem>
#include <mutex>

namespace fs = std::filesystem;

namespace grila {

struct Store::Impl {
    sqlite3* db = nullptr;
    std::recursive_mutex mutex;
    int depth = 0;

    ~Impl()
    {
        if (db)
            sqlite3_close_v2(db);
    }

    void exec(const char* sql)
    {
        char* err = nullptr;
        int rc = sqlite3_exec(db, sql, nullptr, nullptr, &err);
        if (rc != SQLITE_OK) {
            std::string message = err ? err : sqlite3_errstr(rc);
            sqlite3_free(err);
            sql::raise(nullptr, rc, message);
        }
    }

    sql::Statement prepare(std::string_view text) { return sql::Statement(db, text); }
};

Store::Store(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Store::Store(Store&&) noexcept = default;
Store& Store::operator=(Store&&) noexcept = default;
Store::~Store() = default;

void Store::transaction(const std::function<void()>& fn)
{
    std::lock_guard lock(impl_->mutex);
    auto& impl = *impl_;
    if (impl.depth > 0) {
        ++impl.depth;
        try {
            fn();
        } catch (...) {
            --impl.depth;
            throw;
        }
        --impl.depth;
        return;
    }

    impl.exec("BEGIN IMMEDIATE");
    impl.depth = 1;
    try {
        fn();
    } catch (...) {
        impl.depth = 0;
        sqlite3_exec(impl.db, "ROLLBACK", nullptr, nullptr, nullptr);
        throw;
    }
    impl.depth = 0;
    if (sqlite3_exec(impl.db, "COMMIT", nullptr, nullptr, nullptr) != SQLITE_OK) {
        std::string message = sqlite3_errmsg(impl.db);
        sqlite3_exec(impl.db, "ROLLBACK", nullptr, nullptr, nullptr);
        throw Error(ErrorCode::StorageError, "commit: " + message);
    }
}

namespace {

bool valid_database_name(const std::string& name)
{
    if (name.empty())
        return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-';
        if (!ok)
            return false;
    }
    return true;
}

[[noreturn]] void connection_error()
{
    throw Error(ErrorCode::ConnectionError, "Connection error");
}

[[noreturn]] void selection_error()
{
    throw Error(ErrorCode::SelectionError, "Database selection Error");
}

} // namespace

Store open_store(const StoreConfig& config, OpenMode mode)
{
    std::error_code ec;
    if (config.location.empty() || !fs::is_directory(config.location, ec))
        connection_error();
    if (!valid_database_name(config.database_name))
        selection_error();

    const fs::path path = fs::path(config.location) / (config.database_name + ".db");
    const bool exists = fs::is_regular_file(path, ec);
    if (!exists && mode == OpenMode::ExistingOnly)
        selection_error();

    auto impl = std::make_unique<Store::Impl>();
    int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_FULLMUTEX;
    if (mode == OpenMode::CreateIfMissing)
        flags |= SQLITE_OPEN_CREATE;
    if (sqlite3_open_v2(path.c_str(), &impl->db, flags, nullptr) != SQLITE_OK) {
        if (exists)
            selection_error();
        connection_error();
    }

    try {
        impl->exec("PRAGMA foreign_keys = ON");
        impl->exec("PRAGMA busy_timeout = 5000");
        impl->prepare("PRAGMA journal_mode = WAL").run();
        impl->exec("PRAGMA synchronous = NORMAL");
        impl->prepare("SELECT count(*) FROM sqlite_master").run();
    } catch (const Error&) {
        selection_error();
    }
    return Store(std::move(impl));
}

// ---------------------------------------------------------------------------
// Schema

namespace {

struct TableDef {
    const char* name;
    const char* ddl;
};

// Creation order respects the foreign-key graph.
constexpr TableDef kTables[] = {
    {"users", R"(
        CREATE TABLE users (
            id INTEGER PRIMARY KEY,
            username TEXT NOT NULL UNIQUE CHECK (length(username) > 0),
            email TEXT NOT NULL COLLATE NOCASE UNIQUE CHECK (length(email) > 0),
            password_hash TEXT NOT NULL,
            name TEXT NOT NULL,
            first_name TEXT NOT NULL,
            role TEXT NOT NULL CHECK (role IN ('supervisor', 'regular')),
            active INTEGER NOT NULL DEFAULT 1 CHECK (active IN (0, 1)),
            created_at INTEGER NOT NULL
        ))"},
    {"domains", R"(
        CREATE TABLE domains (
            id INTEGER PRIMARY KEY,
            name TEXT NOT NULL CHECK (length(name) > 0)
        ))"},
    {"subdomains", R"(
        CREATE TABLE subdomains (
            id INTEGER PRIMARY KEY,
            domain_id INTEGER NOT NULL REFERENCES domains (id) ON DELETE CASCADE,
            name TEXT NOT NULL CHECK (length(name) > 0)
        ))"},
    {"tests", R"(
        CREATE TABLE tests (
            id INTEGER PRIMARY KEY,
            subdomain_id INTEGER NOT NULL REFERENCES subdomains (id) ON DELETE CASCADE,
            title TEXT NOT NULL CHECK (length(title) > 0),
            time_limit_seconds INTEGER NOT NULL CHECK (time_limit_seconds >= 1),
            ordinal INTEGER NOT NULL CHECK (ordinal >= 1)
        ))"},
    {"questions", R"(
        CREATE TABLE questions (
            id INTEGER PRIMARY KEY,
            test_id INTEGER NOT NULL REFERENCES tests (id) ON DELETE CASCADE,
            text TEXT NOT NULL CHECK (length(text) > 0),
            position INTEGER NOT NULL CHECK (position >= 1),
            UNIQUE (test_id, position)
        ))"},
    {"answer_options", R"(
        CREATE TABLE answer_options (
            id INTEGER PRIMARY KEY,
            question_id INTEGER NOT NULL REFERENCES questions (id) ON DELETE CASCADE,
            text TEXT NOT NULL CHECK (length(text) > 0),
            is_correct INTEGER NOT NULL CHECK (is_correct IN (0, 1))
        ))"},
    {"sessions", R"(
        CREATE TABLE sessions (
            id INTEGER PRIMARY KEY,
            user_id INTEGER NOT NULL REFERENCES users (id) ON DELETE CASCADE,
            test_id INTEGER NOT NULL REFERENCES tests (id) ON DELETE CASCADE,
            started_at INTEGER NOT NULL,
            deadline INTEGER NOT NULL CHECK (deadline > started_at),
            cursor INTEGER NOT NULL CHECK (cursor >= 1),
            state TEXT NOT NULL CHECK (state IN ('active', 'completed', 'expired'))
        ))"},
    {"session_answers", R"(
        CREATE TABLE session_answers (
            id INTEGER PRIMARY KEY,
            session_id INTEGER NOT NULL REFERENCES sessions (id) ON DELETE CASCADE,
            question_id INTEGER NOT NULL REFERENCES questions (id) ON DELETE CASCADE,
            chosen_option_id INTEGER NOT NULL REFERENCES answer_options (id) ON DELETE CASCADE,
            correct INTEGER NOT NULL CHECK (correct IN (0, 1)),
            answered_at INTEGER NOT NULL,
            UNIQUE (session_id, question_id)
        ))"},
    {"results", R"(
        CREATE TABLE results (
            id INTEGER PRIMARY KEY,
            user_id INTEGER NOT NULL REFERENCES users (id) ON DELETE CASCADE,
            test_id INTEGER NOT NULL REFERENCES tests (id) ON DELETE CASCADE,
            session_id INTEGER REFERENCES sessions (id) ON DELETE SET NULL,
            score INTEGER NOT NULL,
            total_questions INTEGER NOT NULL,
            answered_count INTEGER NOT NULL,
            started_at INTEGER NOT NULL,
            finished_at INTEGER NOT NULL,
            outcome TEXT NOT NULL CHECK (outcome IN ('completed', 'expired')),
            CHECK (score >= 0 AND score <= answered_count AND answered_count <= total_questions
                   AND total_questions >= 1 AND finished_at >= started_at)
        ))"},
    {"auth_tokens", R"(
        CREATE TABLE auth_tokens (
            token TEXT PRIMARY KEY,
            user_id INTEGER NOT NULL REFERENCES users (id) ON DELETE CASCADE,
            purpose TEXT NOT NULL CHECK (purpose IN ('access', 'reset')),
            expires_at INTEGER NOT NULL
        ))"},
};

constexpr const char* kIndexes = R"(
    CREATE INDEX IF NOT EXISTS subdomains_domain ON subdomains (domain_id);
    CREATE INDEX IF NOT EXISTS tests_subdomain ON tests (subdomain_id);
    CREATE INDEX IF NOT EXISTS options_question ON answer_options (question_id);
    CREATE UNIQUE INDEX IF NOT EXISTS sessions_one_active ON sessions (user_id) WHERE state = 'active';
    CREATE INDEX IF NOT EXISTS sessions_test ON sessions (test_id);
    CREATE INDEX IF NOT EXISTS results_user_finished ON results (user_id, finished_at);
    CREATE INDEX IF NOT EXISTS results_test ON results (test_id);
    CREATE INDEX IF NOT EXISTS tokens_user ON auth_tokens (user_id);
)";

bool table_exists(Store::Impl& impl, const char* name)
{
    auto stmt = impl.prepare("SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = ?");
    stmt.bind(1, name);
    return stmt.step();
}

} // namespace

SchemaReport init_schema(Store& store)
{
    return store.transact([&] {
        auto& impl = store.impl();
        SchemaReport report;
        for (const auto& table : kTables) {
            if (table_exists(impl, table.name)) {
                report.existing.emplace_back(table.name);
            } else {
                impl.exec(table.ddl);
                report.created.emplace_back(table.name);
            }
        }
        impl.exec(kIndexes);
        return report;
    });
}

bool schema_ready(Store& store)
{
    return store.transact([&] {
        for (const auto& table : kTables) {
            if (!table_exists(store.impl(), table.name))
                return false;
        }
        return true;
    });
}

std::map<std::string, std::int64_t> row_counts(Store& store)
{
    return store.transact([&] {
        std::map<std::string, std::int64_t> counts;
        for (const auto& table : kTables) {
            auto stmt = store.impl().prepare(std::string("SELECT count(*) FROM ") + table.name);
            stmt.step();
            counts[table.name] = stmt.int64(0);
        }
        return counts;
    });
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

Id upsert(Store& store, Id id, std::string_view insert_sql, std::string_view upsert_sql,
          const std::function<void(sql::Statement&, int first)>& bind_fields)
{
    return store.transact([&]() -> Id {
        auto& impl = store.impl();
        if (id == 0) {
            auto stmt = impl.prepare(insert_sql);
            bind_fields(stmt, 1);
            stmt.run();
            return sqlite3_last_insert_rowid(impl.db);
        }
        auto stmt = impl.prepare(upsert_sql);
        stmt.bind(1, id);
        bind_fields(stmt, 2);
        stmt.run();
        return id;
    });
}

Domain read_domain(const sql::Statement& s)
{
    return {s.int64(0), s.text(1)};
}

Subdomain read_subdomain(const sql::Statement& s)
{
    return {s.int64(0), s.int64(1), s.text(2)};
}

Test read_test(const sql::Statement& s)
{
    return {s.int64(0), s.int64(1), s.text(2), s.int64(3), s.int64(4)};
}

Question read_question(const sql::Statement& s)
{
    return {s.int64(0), s.int64(1), s.text(2), s.int64(3)};
}

AnswerOption read_option(const sql::Statement& s)
{
    return {s.int64(0), s.int64(1), s.text(2), s.boolean(3)};
}

template <typename T, typename Reader>
std::vector<T> query_list(Store& store, std::string_view text, std::optional<Id> param,
                          Reader read)
{
    return store.transact([&] {
        auto stmt = store.impl().prepare(text);
        if (param)
            stmt.bind(1, *param);
        std::vector<T> out;
        while (stmt.step())
            out.push_back(read(stmt));
        return out;
    });
}

template <typename T, typename Reader>
std::optional<T> query_one(Store& store, std::string_view text, Id param, Reader read)
{
    auto rows = query_list<T>(store, text, param, read);
    if (rows.empty())
        return std::nullopt;
    return std::move(rows.front());
}

constexpr const char* kDomainCols = "SELECT id, name FROM domains";
constexpr const char* kSubdomainCols = "SELECT id, domain_id, name FROM subdomains";
constexpr const char* kTestCols =
    "SELECT id, subdomain_id, title, time_limit_seconds, ordinal FROM tests";
constexpr const char* kQuestionCols = "SELECT id, test_id, text, position FROM questions";
constexpr const char* kOptionCols = "SELECT id, question_id, text, is_correct FROM answer_options";

std::string where_id(const char* select)
{
    return std::string(select) + " WHERE id = ?";
}

} // namespace

Id put_entity(Store& store, const Domain& e)
{
    return upsert(store, e.id, "INSERT INTO domains (name) VALUES (?)",
                  "INSERT INTO domains (id, name) VALUES (?, ?) "
                  "ON CONFLICT (id) DO UPDATE SET name = excluded.name",
                  [&](sql::Statement& s, int i) { s.bind(i, e.name); });
}

Id put_entity(Store& store, const Subdomain& e)
{
    return upsert(store, e.id, "INSERT INTO subdomains (domain_id, name) VALUES (?, ?)",
                  "INSERT INTO subdomains (id, domain_id, name) VALUES (?, ?, ?) "
                  "ON CONFLICT (id) DO UPDATE SET domain_id = excluded.domain_id, "
                  "name = excluded.name",
                  [&](sql::Statement& s, int i) { s.bind(i, e.domain_id).bind(i + 1, e.name); });
}

Id put_entity(Store& store, const Test& e)
{
    return upsert(
        store, e.id,
        "INSERT INTO tests (subdomain_id, title, time_limit_seconds, ordinal) VALUES (?, ?, ?, ?)",
        "INSERT INTO tests (id, subdomain_id, title, time_limit_seconds, ordinal) "
        "VALUES (?, ?, ?, ?, ?) ON CONFLICT (id) DO UPDATE SET "
        "subdomain_id = excluded.subdomain_id, title = excluded.title, "
        "time_limit_seconds = excluded.time_limit_seconds, ordinal = excluded.ordinal",
        [&](sql::Statement& s, int i) {
            s.bind(i, e.subdomain_id)
                .bind(i + 1, e.title)
                .bind(i + 2, e.time_limit_seconds)
                .bind(i + 3, e.ordinal);
        });
}

Id put_entity(Store& store, const Question& e)
{
    return upsert(store, e.id, "INSERT INTO questions (test_id, text, position) VALUES (?, ?, ?)",
                  "INSERT INTO questions (id, test_id, text, position) VALUES (?, ?, ?, ?) "
                  "ON CONFLICT (id) DO UPDATE SET test_id = excluded.test_id, "
                  "text = excluded.text, position = excluded.position",
                  [&](sql::Statement& s, int i) {
                      s.bind(i, e.test_id).bind(i + 1, e.text).bind(i + 2, e.position);
                  });
}

Id put_entity(Store& store, const AnswerOption& e)
{
    return upsert(
        store, e.id, "INSERT INTO answer_options (question_id, text, is_correct) VALUES (?, ?, ?)",
        "INSERT INTO answer_options (id, question_id, text, is_correct) VALUES (?, ?, ?, ?) "
        "ON CONFLICT (id) DO UPDATE SET question_id = excluded.question_id, "
        "text = excluded.text, is_correct = excluded.is_correct",
        [&](sql::Statement& s, int i) {
            s.bind(i, e.question_id).bind(i + 1, e.text).bind(i + 2, e.is_correct);
        });
}

template <>
std::optional<Domain> get_entity<Domain>(Store& store, Id id)
{
    return query_one<Domain>(store, where_id(kDomainCols), id, read_domain);
}

template <>
std::optional<Subdomain> get_entity<Subdomain>(Store& store, Id id)
{
    return query_one<Subdomain>(store, where_id(kSubdomainCols), id, read_subdomain);
}

template <>
std::optional<Test> get_entity<Test>(Store& store, Id id)
{
    return query_one<Test>(store, where_id(kTestCols), id, read_test);
}

template <>
std::optional<Question> get_entity<Question>(Store& store, Id id)
{
    return query_one<Question>(store, where_id(kQuestionCols), id, read_question);
}

template <>
std::optional<AnswerOption> get_entity<AnswerOption>(Store& store, Id id)
{
    return query_one<AnswerOption>(store, where_id(kOptionCols), id, read_option);
}

namespace {

std::int64_t run_with_id(Store::Impl& impl, const std::string& text, Id id)
{
    auto stmt = impl.prepare(text);
    stmt.bind(1, id);
    return stmt.run();
}

// `tests` is a subquery selecting the ids of the tests to remove, using ?1.
std::int64_t delete_tests(Store::Impl& impl, const std::string& tests, Id id)
{
    const std::string questions = "SELECT id FROM questions WHERE test_id IN (" + tests + ")";
    std::int64_t count = 0;
    count += run_with_id(impl,
                         "DELETE FROM session_answers WHERE session_id IN "
                         "(SELECT id FROM sessions WHERE test_id IN (" + tests + ")) "
                         "OR question_id IN (" + questions + ")",
                         id);
    count += run_with_id(impl, "DELETE FROM results WHERE test_id IN (" + tests + ")", id);
    count += run_with_id(impl, "DELETE FROM sessions WHERE test_id IN (" + tests + ")", id);
    count += run_with_id(
        impl, "DELETE FROM answer_options WHERE question_id IN (" + questions + ")", id);
    count += run_with_id(impl, "DELETE FROM questions WHERE test_id IN (" + tests + ")", id);
    count += run_with_id(impl, "DELETE FROM tests WHERE id IN (" + tests + ")", id);
    return count;
}

} // namespace

std::int64_t delete_entity(Store& store, EntityKind kind, Id id)
{
    return store.transact([&]() -> std::int64_t {
        auto& impl = store.impl();
        switch (kind) {
        case EntityKind::Domain: {
            std::int64_t count = delete_tests(
                impl,
                "SELECT id FROM tests WHERE subdomain_id IN "
                "(SELECT id FROM subdomains WHERE domain_id = ?1)",
                id);
            count += run_with_id(impl, "DELETE FROM subdomains WHERE domain_id = ?1", id);
            count += run_with_id(impl, "DELETE FROM domains WHERE id = ?1", id);
            return count;
        }
        case EntityKind::Subdomain: {
            std::int64_t count =
                delete_tests(impl, "SELECT id FROM tests WHERE subdomain_id = ?1", id);
            count += run_with_id(impl, "DELETE FROM subdomains WHERE id = ?1", id);
            return count;
        }
        case EntityKind::Test:
            return delete_tests(impl, "SELECT ?1", id);
        case EntityKind::Question: {
            std::int64_t count = run_with_id(
                impl,
                "DELETE FROM session_answers WHERE question_id = ?1 OR chosen_option_id IN "
                "(SELECT id FROM answer_options WHERE question_id = ?1)",
                id);
            count += run_with_id(impl, "DELETE FROM answer_options WHERE question_id = ?1", id);
            count += run_with_id(impl, "DELETE FROM questions WHERE id = ?1", id);
            return count;
        }
        case EntityKind::AnswerOption: {
            std::int64_t count =
                run_with_id(impl, "DELETE FROM session_answers WHERE chosen_option_id = ?1", id);
            count += run_with_id(impl, "DELETE FROM answer_options WHERE id = ?1", id);
            return count;
        }
        }
        return 0;
    });
}

std::vector<Domain> list_domains(Store& store)
{
    return query_list<Domain>(store, std::string(kDomainCols) + " ORDER BY name, id",
                              std::nullopt, read_domain);
}

std::vector<Subdomain> list_subdomains(Store& store, Id domain_id)
{
    return query_list<Subdomain>(store,
                                 std::string(kSubdomainCols) +
                                     " WHERE domain_id = ? ORDER BY name, id",
                                 domain_id, read_subdomain);
}

std::vector<Test> list_tests(Store& store, Id subdomain_id)
{
    return query_list<Test>(store,
                            std::string(kTestCols) +
                                " WHERE subdomain_id = ? ORDER BY title, ordinal, id",
                            subdomain_id, read_test);
}

std::vector<Question> list_questions(Store& store, Id test_id)
{
    return query_list<Question>(store,
                                std::string(kQuestionCols) + " WHERE test_id = ? ORDER BY position",
                                test_id, read_question);
}

std::vector<AnswerOption> list_options(Store& store, Id question_id)
{
    return query_list<AnswerOption>(store,
                                    std::string(kOptionCols) + " WHERE question_id = ? ORDER BY id",
                                    question_id, read_option);
}

std::vector<AnswerOption> list_test_options(Store& store, Id test_id)
{
    return query_list<AnswerOption>(
        store,
        std::string(kOptionCols) +
            " WHERE question_id IN (SELECT id FROM questions WHERE test_id = ?) ORDER BY id",
        test_id, read_option);
}

// ---------------------------------------------------------------------------
// Accounts and tokens

namespace {

constexpr const char* kUserCols =
    "SELECT id, username, email, password_hash, name, first_name, role, active, created_at "
    "FROM users";

UserAccount read_user(const sql::Statement& s)
{
    UserAccount u;
    u.id = s.int64(0);
    u.username = s.text(1);
    u.email = s.text(2);
    u.password_hash = s.text(3);
    u.name = s.text(4);
    u.first_name = s.text(5);
    u.role = parse_role(s.text(6)).value_or(Role::Regular);
    u.active = s.boolean(7);
    u.created_at = s.int64(8);
    return u;
}

std::optional<UserAccount> find_user_by(Store& store, const char* column, const std::string& value)
{
    return store.transact([&]() -> std::optional<UserAccount> {
        auto stmt = store.impl().prepare(std::string(kUserCols) + " WHERE " + column + " = ?");
        stmt.bind(1, value);
        if (!stmt.step())
            return std::nullopt;
        return read_user(stmt);
    });
}

std::string_view purpose_name(TokenPurpose purpose)
{
    return purpose == TokenPurpose::Access ? "access" : "reset";
}

} // namespace

Id insert_user(Store& store, const UserAccount& user)
{
    return store.transact([&]() -> Id {
        auto& impl = store.impl();
        auto stmt = impl.prepare(
            "INSERT INTO users (username, email, password_hash, name, first_name, role, active, "
            "created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
        stmt.bind_all(user.username, user.email, user.password_hash, user.name, user.first_name,
                      to_string(user.role), user.active, user.created_at);
        stmt.run();
        return sqlite3_last_insert_rowid(impl.db);
    });
}

std::optional<UserAccount> get_user(Store& store, Id id)
{
    return query_one<UserAccount>(store, std::string(kUserCols) + " WHERE id = ?", id, read_user);
}

std::optional<UserAccount> find_user_by_username(Store& store, const std::string& username)
{
    return find_user_by(store, "username", username);
}

std::optional<UserAccount> find_user_by_email(Store& store, const std::string& email)
{
    return find_user_by(store, "email", email);
}

std::vector<UserAccount> list_users(Store& store)
{
    return query_list<UserAccount>(store, std::string(kUserCols) + " ORDER BY username",
                                   std::nullopt, read_user);
}

void set_password_hash(Store& store, Id user_id, const std::string& password_hash)
{
    store.transact([&] {
        auto stmt = store.impl().prepare("UPDATE users SET password_hash = ? WHERE id = ?");
        stmt.bind_all(password_hash, user_id).run();
    });
}

bool set_user_active(Store& store, Id user_id, bool active)
{
    return store.transact([&] {
        auto stmt = store.impl().prepare("UPDATE users SET active = ? WHERE id = ?");
        return stmt.bind_all(active, user_id).run() > 0;
    });
}

void insert_token(Store& store, const TokenRow& token)
{
    store.transact([&] {
        auto stmt = store.impl().prepare(
            "INSERT INTO auth_tokens (token, user_id, purpose, expires_at) VALUES (?, ?, ?, ?)");
        stmt.bind_all(token.digest, token.user_id, purpose_name(token.purpose), token.expires_at)
            .run();
    });
}

std::optional<TokenRow> find_token(Store& store, const std::string& digest, TokenPurpose purpose)
{
    return store.transact([&]() -> std::optional<TokenRow> {
        auto stmt = store.impl().prepare(
            "SELECT token, user_id, expires_at FROM auth_tokens WHERE token = ? AND purpose = ?");
        stmt.bind_all(digest, purpose_name(purpose));
        if (!stmt.step())
            return std::nullopt;
        return TokenRow{stmt.text(0), stmt.int64(1), purpose, stmt.int64(2)};
    });
}

bool delete_token(Store& store, const std::string& digest)
{
    return store.transact([&] {
        auto stmt = store.impl().prepare("DELETE FROM auth_tokens WHERE token = ?");
        return stmt.bind_all(digest).run() > 0;
    });
}

std::int64_t delete_user_tokens(Store& store, Id user_id, TokenPurpose purpose)
{
    return store.transact([&] {
        auto stmt =
            store.impl().prepare("DELETE FROM auth_tokens WHERE user_id = ? AND purpose = ?");
        return stmt.bind_all(user_id, purpose_name(purpose)).run();
    });
}

std::int64_t delete_expired_tokens(Store& store, Timestamp now)
{
    return store.transact([&] {
        auto stmt = store.impl().prepare("DELETE FROM auth_tokens WHERE expires_at <= ?");
        return stmt.bind_all(now).run();
    });
}

// ---------------------------------------------------------------------------
// Sessions

std::string_view to_string(SessionState state)
{
    switch (state) {
    case SessionState::Active: return "active";
    case SessionState::Completed: return "completed";
    case SessionState::Expired: return "expired";
    }
    return "active";
}

namespace {

constexpr const char* kSessionCols =
    "SELECT id, user_id, test_id, started_at, deadline, cursor, state FROM sessions";

SessionState parse_state(const std::string& text)
{
    if (text == "completed")
        return SessionState::Completed;
    if (text == "expired")
        return SessionState::Expired;
    return SessionState::Active;
}

SessionRow read_session(const sql::Statement& s)
{
    return {s.int64(0), s.int64(1), s.int64(2), s.int64(3),
            s.int64(4), s.int64(5), parse_state(s.text(6))};
}

AnswerRecord read_answer(const sql::Statement& s)
{
    return {s.int64(0), s.int64(1), s.int64(2), s.boolean(3), s.int64(4)};
}

void store_answer(Store::Impl& impl, const AnswerRecord& record, bool keep_existing)
{
    auto check = impl.prepare("SELECT is_correct FROM answer_options WHERE id = ? AND question_id = ?");
    check.bind_all(record.chosen_option_id, record.question_id);
    if (!check.step()) {
        throw Error(ErrorCode::ConstraintError,
                    "option " + std::to_string(record.chosen_option_id) +
                        " does not belong to question " + std::to_string(record.question_id));
    }
    if (check.boolean(0) != record.correct)
        throw Error(ErrorCode::ConstraintError, "answer correctness disagrees with its option");

    std::string text =
        "INSERT INTO session_answers (session_id, question_id, chosen_option_id, correct, "
        "answered_at) VALUES (?, ?, ?, ?, ?)";
    if (keep_existing)
        text += " ON CONFLICT (session_id, question_id) DO NOTHING";
    auto stmt = impl.prepare(text);
    stmt.bind_all(record.session_id, record.question_id, record.chosen_option_id, record.correct,
                  record.answered_at)
        .run();
}

} // namespace

Id insert_session(Store& store, const SessionRow& session)
{
    return store.transact([&]() -> Id {
        auto& impl = store.impl();
        auto stmt = impl.prepare(
            "INSERT INTO sessions (user_id, test_id, started_at, deadline, cursor, state) "
            "VALUES (?, ?, ?, ?, ?, ?)");
        stmt.bind_all(session.user_id, session.test_id, session.started_at, session.deadline,
                      session.cursor, to_string(session.state))
            .run();
        return sqlite3_last_insert_rowid(impl.db);
    });
}

std::optional<SessionRow> get_session(Store& store, Id id)
{
    return query_one<SessionRow>(store, where_id(kSessionCols), id, read_session);
}

std::optional<SessionRow> find_active_session(Store& store, Id user_id)
{
    return query_one<SessionRow>(store,
                                 std::string(kSessionCols) +
                                     " WHERE user_id = ? AND state = 'active'",
                                 user_id, read_session);
}

std::vector<Id> list_overdue_sessions(Store& store, Timestamp now)
{
    return query_list<Id>(store,
                          "SELECT id FROM sessions WHERE state = 'active' AND deadline < ? "
                          "ORDER BY id",
                          now, [](const sql::Statement& s) { return s.int64(0); });
}

void update_session(Store& store, Id id, std::int64_t cursor, SessionState state)
{
    store.transact([&] {
        auto stmt = store.impl().prepare("UPDATE sessions SET cursor = ?, state = ? WHERE id = ?");
        stmt.bind_all(cursor, to_string(state), id).run();
    });
}

void insert_answer(Store& store, const AnswerRecord& record)
{
    store.transact([&] { store_answer(store.impl(), record, false); });
}

std::vector<AnswerRecord> list_answers(Store& store, Id session_id)
{
    return query_list<AnswerRecord>(store,
                                    "SELECT session_id, question_id, chosen_option_id, correct, "
                                    "answered_at FROM session_answers WHERE session_id = ? "
                                    "ORDER BY id",
                                    session_id, read_answer);
}

// ---------------------------------------------------------------------------
// Results

namespace {

constexpr const char* kResultCols =
    "SELECT r.id, r.user_id, r.test_id, r.session_id, r.score, r.total_questions, "
    "r.answered_count, r.started_at, r.finished_at, r.outcome";

TestResult read_result(const sql::Statement& s)
{
    TestResult r;
    r.id = s.int64(0);
    r.user_id = s.int64(1);
    r.test_id = s.int64(2);
    r.session_id = s.optional_int64(3);
    r.score = s.int64(4);
    r.total_questions = s.int64(5);
    r.answered_count = s.int64(6);
    r.started_at = s.int64(7);
    r.finished_at = s.int64(8);
    r.outcome = parse_outcome(s.text(9)).value_or(Outcome::Completed);
    return r;
}

} // namespace

Id save_result(Store& store, const TestResult& result, const std::vector<AnswerRecord>& records)
{
    if (!satisfies_invariants(result))
        throw Error(ErrorCode::ConstraintError, "result violates score/count/time invariants");
    if (!records.empty()) {
        if (!result.session_id)
            throw Error(ErrorCode::ConstraintError, "answer records require a session");
        if (static_cast<std::int64_t>(records.size()) != result.answered_count ||
            compute_score(records) != result.score) {
            throw Error(ErrorCode::ConstraintError, "answer records disagree with result counts");
        }
        for (const auto& r : records) {
            if (r.session_id != *result.session_id)
                throw Error(ErrorCode::ConstraintError, "answer record from another session");
        }
    }

    return store.transact([&]() -> Id {
        auto& impl = store.impl();
        for (const auto& r : records)
            store_answer(impl, r, true);
        auto stmt = impl.prepare(
            "INSERT INTO results (user_id, test_id, session_id, score, total_questions, "
            "answered_count, started_at, finished_at, outcome) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)");
        stmt.bind_all(result.user_id, result.test_id, result.session_id, result.score,
                      result.total_questions, result.answered_count, result.started_at,
                      result.finished_at, to_string(result.outcome))
            .run();
        return sqlite3_last_insert_rowid(impl.db);
    });
}

std::optional<TestResult> get_result(Store& store, Id id)
{
    return query_one<TestResult>(store, std::string(kResultCols) + " FROM results r WHERE r.id = ?",
                                 id, read_result);
}

std::vector<TestResult> list_recent_results(Store& store, Id user_id, std::int64_t limit)
{
    if (limit < 1)
        throw Error(ErrorCode::ConstraintError, "history limit must be at least 1");
    return store.transact([&] {
        auto stmt = store.impl().prepare(std::string(kResultCols) +
                                         " FROM results r WHERE r.user_id = ? "
                                         "ORDER BY r.finished_at DESC, r.id DESC LIMIT ?");
        stmt.bind_all(user_id, limit);
        std::vector<TestResult> out;
        while (stmt.step())
            out.push_back(read_result(stmt));
        return out;
    });
}

std::vector<std::pair<std::string, TestResult>> list_all_results(Store& store,
                                                                 std::optional<Id> user_id)
{
    return store.transact([&] {
        std::string text = std::string(kResultCols) +
                           ", u.username FROM results r JOIN users u ON u.id = r.user_id";
        if (user_id)
            text += " WHERE r.user_id = ?";
        text += " ORDER BY r.finished_at DESC, r.id DESC";
        auto stmt = store.impl().prepare(text);
        if (user_id)
            stmt.bind(1, *user_id);
        std::vector<std::pair<std::string, TestResult>> out;
        while (stmt.step())
            out.emplace_back(stmt.text(10), read_result(stmt));
        return out;
    });
}

std::int64_t delete_result(Store& store, Id id)
{
    return store.transact([&]() -> std::int64_t {
        auto& impl = store.impl();
        auto result = get_result(store, id);
        if (!result)
            return 0;
        std::int64_t count = run_with_id(impl, "DELETE FROM results WHERE id = ?1", id);
        if (result->session_id) {
            count += run_with_id(impl, "DELETE FROM session_answers WHERE session_id = ?1",
                                 *result->session_id);
            count += run_with_id(impl, "DELETE FROM sessions WHERE id = ?1", *result->session_id);
        }
        return count;
    });
}

} // namespace grila
