#pragma once

// nlohmann::json mappings for the domain and engine types. Wire field names
// match the struct member names; timestamps are integer UTC seconds.

#include "grila/admin_service.hpp"
#include "grila/auth.hpp"
#include "grila/domain_model.hpp"
#include "grila/error.hpp"
#include "grila/test_engine.hpp"

#include "json.hpp"

namespace grila {

using json = nlohmann::json;

void to_json(json& j, const Domain& d);
void to_json(json& j, const Subdomain& s);
void to_json(json& j, const Test& t);
void to_json(json& j, const Question& q);
void to_json(json& j, const AnswerOption& o);
void to_json(json& j, const UserAccount& u);  // never includes the password hash
void to_json(json& j, const TestResult& r);
void to_json(json& j, const TestSession& s);
void to_json(json& j, const QuestionView& v);
void to_json(json& j, const ExpiredNotice& n);
void to_json(json& j, const FinishedNotice& n);
void to_json(json& j, const NextStep& step);
void to_json(json& j, const AnswerOutcome& a);
void to_json(json& j, const AnnotatedResult& r);
void to_json(json& j, const TestBundle& b);
void to_json(json& j, const Violation& v);

void from_json(const json& j, Domain& d);
void from_json(const json& j, Subdomain& s);
void from_json(const json& j, Test& t);
void from_json(const json& j, Question& q);
void from_json(const json& j, AnswerOption& o);
/// Accepts {"subdomain_id", "title", "time_limit_seconds", "ordinal",
/// "questions": [{"text", "position"?, "options": [{"text", "is_correct"}]}]}.
void from_json(const json& j, TestBundle& b);

/// Parses `text`, turning any syntax or type error into Error{BadRequest}.
json parse_json(const std::string& text);

std::string_view flag_code(FlagKind kind);

/// Runs `fn` and rethrows nlohmann type/range errors as Error{BadRequest}.
template <typename F>
auto decode(F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BadRequest, std::string("malformed request body: ") + e.what());
    }
}

} // namespace grila
