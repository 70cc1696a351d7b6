#include "sqlite.hpp"

namespace grila::sql {

void raise(sqlite3* db, int rc, std::string_view context)
{
    std::string message(context);
    message += ": ";
    message += db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
    if ((rc & 0xff) == SQLITE_CONSTRAINT)
        throw Error(ErrorCode::ConstraintError, message);
    throw Error(ErrorCode::StorageError, message);
}

Statement::Statement(sqlite3* db, std::string_view sql) : db_(db)
{
    int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr);
    if (rc != SQLITE_OK)
        raise(db_, rc, "prepare");
}

Statement::~Statement()
{
    sqlite3_finalize(stmt_);
}

Statement& Statement::bind(int index, std::int64_t value)
{
    if (int rc = sqlite3_bind_int64(stmt_, index, value); rc != SQLITE_OK)
        raise(db_, rc, "bind");
    return *this;
}

Statement& Statement::bind(int index, std::string_view value)
{
    int rc = sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()),
                               SQLITE_TRANSIENT);
    if (rc != SQLITE_OK)
        raise(db_, rc, "bind");
    return *this;
}

Statement& Statement::bind(int index, std::nullopt_t)
{
    if (int rc = sqlite3_bind_null(stmt_, index); rc != SQLITE_OK)
        raise(db_, rc, "bind");
    return *this;
}

Statement& Statement::bind(int index, const std::optional<std::int64_t>& value)
{
    return value ? bind(index, *value) : bind(index, std::nullopt);
}

bool Statement::step()
{
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW)
        return true;
    if (rc == SQLITE_DONE)
        return false;
    raise(db_, rc, "step");
}

std::int64_t Statement::run()
{
    while (step()) {
    }
    return sqlite3_changes(db_);
}

std::int64_t Statement::int64(int column) const
{
    return sqlite3_column_int64(stmt_, column);
}

std::string Statement::text(int column) const
{
    auto* data = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, column));
    if (!data)
        return {};
    return std::string(data, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, column)));
}

bool Statement::is_null(int column) const
{
    return sqlite3_column_type(stmt_, column) == SQLITE_NULL;
}

std::optional<std::int64_t> Statement::optional_int64(int column) const
{
    if (is_null(column))
        return std::nullopt;
    return int64(column);
}

} // namespace grila::sql
