#include "fixtures.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace grila::testing {

TempDir::TempDir()
{
    std::string pattern = (std::filesystem::temp_directory_path() / "grila-XXXXXX").string();
    if (!mkdtemp(pattern.data()))
        throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

Store Fixture::make()
{
    auto s = open_store(config, OpenMode::CreateIfMissing);
    init_schema(s);
    return s;
}

AuthConfig fast_auth_config()
{
    return AuthConfig{24 * 60 * 60, 60 * 60, HashProfile::Minimal};
}

SeededTest seed_test(Store& store, int questions, int options, std::int64_t time_limit,
                     const std::vector<int>& key, Id subdomain_id)
{
    SeededTest seeded;
    if (subdomain_id == 0) {
        seeded.domain_id = put_entity(store, Domain{0, "Teste grilă"});
        seeded.subdomain_id = put_entity(store, Subdomain{0, seeded.domain_id, "Cultura generala"});
    } else {
        seeded.subdomain_id = subdomain_id;
    }
    seeded.test_id =
        put_entity(store, Test{0, seeded.subdomain_id, "Testul nr 3", time_limit, 3});
    for (int q = 0; q < questions; ++q) {
        const int correct = q < static_cast<int>(key.size()) ? key[q] : 0;
        seeded.key.push_back(correct);
        Id qid = put_entity(store, Question{0, seeded.test_id, "Q" + std::to_string(q + 1), q + 1});
        seeded.question_ids.push_back(qid);
        std::vector<Id> ids;
        for (int o = 0; o < options; ++o) {
            ids.push_back(put_entity(
                store, AnswerOption{0, qid, "Q" + std::to_string(q + 1) + "O" + std::to_string(o + 1),
                                    o == correct}));
        }
        seeded.option_ids.push_back(std::move(ids));
    }
    return seeded;
}

TestBundle make_bundle(Id subdomain_id, int questions, int options, const std::vector<int>& key)
{
    TestBundle bundle;
    bundle.test = Test{0, subdomain_id, "Bundle test", 600, 1};
    for (int q = 0; q < questions; ++q) {
        const int correct = q < static_cast<int>(key.size()) ? key[q] : 0;
        QuestionDraft draft;
        draft.question = Question{0, 0, "Question " + std::to_string(q + 1), q + 1};
        for (int o = 0; o < options; ++o)
            draft.options.push_back(AnswerOption{0, 0, "Option " + std::to_string(o + 1), o == correct});
        bundle.questions.push_back(std::move(draft));
    }
    return bundle;
}

Principal make_user(AuthService& auth, const std::string& username, Timestamp now)
{
    auto user = auth.register_user(
        {username, "pw-" + username, "Name " + username, "First " + username,
         username + "@example.org"},
        now);
    return {user.id, user.role};
}

Principal make_supervisor(AuthService& auth, const std::string& username, Timestamp now)
{
    auto user = auth.create_supervisor(
        {username, "pw-" + username, "Name " + username, "First " + username,
         username + "@example.org"},
        now);
    return {user.id, user.role};
}

namespace {

struct Connection {
    sqlite3* db = nullptr;

    explicit Connection(const StoreConfig& config)
    {
        auto path = std::filesystem::path(config.location) / (config.database_name + ".db");
        if (sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK)
            throw std::runtime_error("cannot open " + path.string());
        sqlite3_busy_timeout(db, 5000);
    }
    ~Connection() { sqlite3_close(db); }

    std::vector<std::vector<std::string>> rows(const std::string& sql) const
    {
        sqlite3_stmt* stmt = nullptr;
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
            throw std::runtime_error(sqlite3_errmsg(db));
        std::vector<std::vector<std::string>> out;
        while (sqlite3_step(stmt) == SQLITE_ROW) {
            std::vector<std::string> row;
            for (int c = 0; c < sqlite3_column_count(stmt); ++c) {
                auto* text = sqlite3_column_text(stmt, c);
                row.push_back(text ? reinterpret_cast<const char*>(text) : "NULL");
            }
            out.push_back(std::move(row));
        }
        sqlite3_finalize(stmt);
        return out;
    }
};

} // namespace

std::vector<std::string> table_names(const StoreConfig& config)
{
    Connection conn(config);
    std::vector<std::string> names;
    for (const auto& row : conn.rows("SELECT name FROM sqlite_master WHERE type = 'table' "
                                     "AND name NOT LIKE 'sqlite_%' ORDER BY name"))
        names.push_back(row[0]);
    return names;
}

std::string store_digest(const StoreConfig& config)
{
    Connection conn(config);
    std::string digest;
    for (const auto& table : table_names(config)) {
        digest += "[" + table + "]\n";
        for (const auto& row : conn.rows("SELECT * FROM " + table + " ORDER BY 1")) {
            for (const auto& cell : row)
                digest += cell + "|";
            digest += "\n";
        }
    }
    return digest;
}

std::vector<std::string> foreign_key_edges(const StoreConfig& config)
{
    Connection conn(config);
    std::vector<std::string> edges;
    for (const auto& table : table_names(config)) {
        // columns: id, seq, table, from, to, on_update, on_delete, match
        for (const auto& row : conn.rows("PRAGMA foreign_key_list(" + table + ")"))
            edges.push_back(table + "." + row[3] + "->" + row[2]);
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

} // namespace grila::testing
