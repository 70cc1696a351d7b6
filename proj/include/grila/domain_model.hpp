#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grila {

using Id = std::int64_t;
/// UTC seconds since the epoch.
using Timestamp = std::int64_t;

enum class Role { Supervisor, Regular };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct UserAccount {
    Id id = 0;
    std::string username;
    std::string password_hash;
    std::string name;
    std::string first_name;
    std::string email;
    Role role = Role::Regular;
    bool active = true;
    Timestamp created_at = 0;
};

struct Domain {
    Id id = 0;
    std::string name;

    bool operator==(const Domain&) const = default;
};

struct Subdomain {
    Id id = 0;
    Id domain_id = 0;
    std::string name;

    bool operator==(const Subdomain&) const = default;
};

struct Test {
    Id id = 0;
    Id subdomain_id = 0;
    std::string title;
    std::int64_t time_limit_seconds = 0;
    std::int64_t ordinal = 0;

    bool operator==(const Test&) const = default;
};

struct Question {
    Id id = 0;
    Id test_id = 0;
    std::string text;
    std::int64_t position = 0;  // 1-based

    bool operator==(const Question&) const = default;
};

struct AnswerOption {
    Id id = 0;
    Id question_id = 0;
    std::string text;
    bool is_correct = false;

    bool operator==(const AnswerOption&) const = default;
};

struct AnswerRecord {
    Id session_id = 0;
    Id question_id = 0;
    Id chosen_option_id = 0;
    bool correct = false;
    Timestamp answered_at = 0;

    bool operator==(const AnswerRecord&) const = default;
};

enum class Outcome { Completed, Expired };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);

struct TestResult {
    Id id = 0;
    Id user_id = 0;
    Id test_id = 0;
    /// Session that produced the result; absent for imported results.
    std::optional<Id> session_id;
    std::int64_t score = 0;
    std::int64_t total_questions = 0;
    std::int64_t answered_count = 0;
    Timestamp started_at = 0;
    Timestamp finished_at = 0;
    Outcome outcome = Outcome::Completed;

    bool operator==(const TestResult&) const = default;
};

/// Checks 0 <= score <= answered_count <= total_questions, total >= 1 and
/// finished_at >= started_at.
bool satisfies_invariants(const TestResult& result);

enum class EntityKind { Domain, Subdomain, Test, Question, AnswerOption };

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view text);

struct Violation {
    EntityKind kind = EntityKind::Test;
    Id entity_id = 0;
    std::string message;

    bool operator==(const Violation&) const = default;
    auto operator<=>(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Checks the structural rules of a publishable test: at least one question,
/// positions 1..N without gaps or repeats, at least two options per question
/// and exactly one correct option. The result is sorted, so it does not
/// depend on the order of the inputs.
ValidationReport validate_test(const Test& test, std::span<const Question> questions,
                               std::span<const AnswerOption> options);

/// One point per correct answer.
std::int64_t compute_score(std::span<const AnswerRecord> records);

} // namespace grila
