#include "grila/domain_model.hpp"

#include "grila/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace grila {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ConnectionError: return "ConnectionError";
    case ErrorCode::SelectionError: return "SelectionError";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::ConstraintError: return "ConstraintError";
    case ErrorCode::DuplicateIdentity: return "DuplicateIdentity";
    case ErrorCode::WeakInput: return "WeakInput";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::InvalidTicket: return "InvalidTicket";
    case ErrorCode::Unauthenticated: return "Unauthenticated";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::UnknownTest: return "UnknownTest";
    case ErrorCode::InvalidTest: return "InvalidTest";
    case ErrorCode::SessionAlreadyActive: return "SessionAlreadyActive";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionFinished: return "SessionFinished";
    case ErrorCode::ForwardOnly: return "ForwardOnly";
    case ErrorCode::UnknownOption: return "UnknownOption";
    case ErrorCode::IncompleteSession: return "IncompleteSession";
    case ErrorCode::UnknownResult: return "UnknownResult";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

std::string_view to_string(Role role)
{
    return role == Role::Supervisor ? "supervisor" : "regular";
}

std::optional<Role> parse_role(std::string_view text)
{
    if (text == "supervisor")
        return Role::Supervisor;
    if (text == "regular")
        return Role::Regular;
    return std::nullopt;
}

std::string_view to_string(Outcome outcome)
{
    return outcome == Outcome::Completed ? "completed" : "expired";
}

std::optional<Outcome> parse_outcome(std::string_view text)
{
    if (text == "completed")
        return Outcome::Completed;
    if (text == "expired")
        return Outcome::Expired;
    return std::nullopt;
}

std::string_view to_string(EntityKind kind)
{
    switch (kind) {
    case EntityKind::Domain: return "domain";
    case EntityKind::Subdomain: return "subdomain";
    case EntityKind::Test: return "test";
    case EntityKind::Question: return "question";
    case EntityKind::AnswerOption: return "option";
    }
    return "unknown";
}

std::optional<EntityKind> parse_entity_kind(std::string_view text)
{
    for (auto kind : {EntityKind::Domain, EntityKind::Subdomain, EntityKind::Test,
                      EntityKind::Question, EntityKind::AnswerOption}) {
        if (text == to_string(kind))
            return kind;
    }
    return std::nullopt;
}

bool satisfies_invariants(const TestResult& result)
{
    return result.score >= 0 && result.score <= result.answered_count &&
           result.answered_count <= result.total_questions && result.total_questions >= 1 &&
           result.finished_at >= result.started_at;
}

std::string ValidationReport::summary() const
{
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty())
            out += "; ";
        out += v.message;
    }
    return out;
}

ValidationReport validate_test(const Test& test, std::span<const Question> questions,
                               std::span<const AnswerOption> options)
{
    ValidationReport report;
    auto add = [&](EntityKind kind, Id id, std::string message) {
        report.violations.push_back({kind, id, std::move(message)});
    };
    const auto test_ref = std::to_string(test.id);

    if (test.title.empty())
        add(EntityKind::Test, test.id, "empty title for test " + test_ref);
    if (test.time_limit_seconds < 1)
        add(EntityKind::Test, test.id, "time limit below 1 second for test " + test_ref);
    if (test.ordinal < 1)
        add(EntityKind::Test, test.id, "ordinal below 1 for test " + test_ref);
    if (questions.empty())
        add(EntityKind::Test, test.id, "no questions in test " + test_ref);

    std::map<Id, const Question*> by_id;
    std::map<std::int64_t, int> position_uses;
    for (const auto& q : questions) {
        const auto ref = std::to_string(q.id);
        if (!by_id.emplace(q.id, &q).second)
            add(EntityKind::Question, q.id, "duplicate question id " + ref);
        if (q.test_id != test.id)
            add(EntityKind::Question, q.id, "question " + ref + " belongs to another test");
        if (q.text.empty())
            add(EntityKind::Question, q.id, "empty text for question " + ref);
        if (++position_uses[q.position] == 2)
            add(EntityKind::Test, test.id,
                "duplicate position " + std::to_string(q.position) + " in test " + test_ref);
    }
    if (!questions.empty()) {
        const auto n = static_cast<std::int64_t>(questions.size());
        for (std::int64_t p = 1; p <= n; ++p) {
            if (!position_uses.contains(p)) {
                add(EntityKind::Test, test.id,
                    "missing position " + std::to_string(p) + " in test " + test_ref);
            }
        }
        for (const auto& [position, uses] : position_uses) {
            if (position < 1 || position > n) {
                add(EntityKind::Test, test.id,
                    "position " + std::to_string(position) + " out of range 1.." +
                        std::to_string(n) + " in test " + test_ref);
            }
        }
    }

    std::map<Id, int> option_count;
    std::map<Id, int> correct_count;
    std::set<Id> option_ids;
    for (const auto& o : options) {
        const auto ref = std::to_string(o.id);
        if (!option_ids.insert(o.id).second)
            add(EntityKind::AnswerOption, o.id, "duplicate option id " + ref);
        if (o.text.empty())
            add(EntityKind::AnswerOption, o.id, "empty text for option " + ref);
        if (!by_id.contains(o.question_id)) {
            add(EntityKind::AnswerOption, o.id,
                "option " + ref + " references unknown question " + std::to_string(o.question_id));
            continue;
        }
        ++option_count[o.question_id];
        if (o.is_correct)
            ++correct_count[o.question_id];
    }
    for (const auto& [id, q] : by_id) {
        const auto ref = std::to_string(id);
        if (option_count[id] < 2)
            add(EntityKind::Question, id, "fewer than 2 options for question " + ref);
        if (correct_count[id] == 0)
            add(EntityKind::Question, id, "no correct option for question " + ref);
        else if (correct_count[id] > 1)
            add(EntityKind::Question, id, "multiple correct options for question " + ref);
    }

    std::sort(report.violations.begin(), report.violations.end());
    report.violations.erase(std::unique(report.violations.begin(), report.violations.end()),
                            report.violations.end());
    return report;
}

std::int64_t compute_score(std::span<const AnswerRecord> records)
{
    return std::count_if(records.begin(), records.end(),
                         [](const AnswerRecord& r) { return r.correct; });
}

} // namespace grila
