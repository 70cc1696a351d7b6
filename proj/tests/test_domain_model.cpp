#include "grila/domain_model.hpp"

#include "support/oracle.hpp"

#include "doctest.h"

#include <algorithm>
#include <random>

using namespace grila;
using grila::testing::for_each_answer_vector;
using grila::testing::oracle_score;

namespace {

struct Catalog {
    Test test;
    std::vector<Question> questions;
    std::vector<AnswerOption> options;
};

// 3 questions x 4 options, option 1 of each question correct.
Catalog well_formed(int questions = 3, int options = 4)
{
    Catalog c;
    c.test = Test{7, 1, "Testul nr 3", 600, 3};
    Id next_option = 100;
    for (int q = 1; q <= questions; ++q) {
        c.questions.push_back(Question{q, 7, "Q" + std::to_string(q), q});
        for (int o = 0; o < options; ++o)
            c.options.push_back(AnswerOption{next_option++, q, "O" + std::to_string(o), o == 1});
    }
    return c;
}

bool has_message(const ValidationReport& report, const std::string& text)
{
    return std::any_of(report.violations.begin(), report.violations.end(),
                       [&](const Violation& v) { return v.message == text; });
}

} // namespace

TEST_CASE("validate_test accepts a well-formed 3x4 test")
{
    auto c = well_formed();
    auto report = validate_test(c.test, c.questions, c.options);
    CHECK(report.ok());
    CHECK(report.summary().empty());
}

TEST_CASE("validate_test names a question without a correct option")
{
    auto c = well_formed();
    for (auto& o : c.options) {
        if (o.question_id == 2)
            o.is_correct = false;
    }
    auto report = validate_test(c.test, c.questions, c.options);
    REQUIRE_FALSE(report.ok());
    CHECK(has_message(report, "no correct option for question 2"));
    CHECK(report.violations.size() == 1);
    CHECK(report.violations[0].entity_id == 2);
    CHECK(report.violations[0].kind == EntityKind::Question);
}

TEST_CASE("validate_test rejects multiple correct options")
{
    auto c = well_formed();
    for (auto& o : c.options) {
        if (o.question_id == 3)
            o.is_correct = true;
    }
    auto report = validate_test(c.test, c.questions, c.options);
    REQUIRE_FALSE(report.ok());
    CHECK(has_message(report, "multiple correct options for question 3"));
}

TEST_CASE("validate_test structural violations")
{
    SUBCASE("fewer than two options")
    {
        auto c = well_formed(2, 1);
        auto report = validate_test(c.test, c.questions, c.options);
        CHECK(has_message(report, "fewer than 2 options for question 1"));
        CHECK(has_message(report, "fewer than 2 options for question 2"));
    }
    SUBCASE("gap in positions")
    {
        auto c = well_formed();
        c.questions[2].position = 4;
        auto report = validate_test(c.test, c.questions, c.options);
        CHECK(has_message(report, "missing position 3 in test 7"));
        CHECK(has_message(report, "position 4 out of range 1..3 in test 7"));
    }
    SUBCASE("repeated position")
    {
        auto c = well_formed();
        c.questions[2].position = 1;
        auto report = validate_test(c.test, c.questions, c.options);
        CHECK(has_message(report, "duplicate position 1 in test 7"));
    }
    SUBCASE("empty test and bad limits")
    {
        Test t{9, 1, "", 0, 0};
        auto report = validate_test(t, {}, {});
        CHECK(has_message(report, "no questions in test 9"));
        CHECK(has_message(report, "empty title for test 9"));
        CHECK(has_message(report, "time limit below 1 second for test 9"));
        CHECK(has_message(report, "ordinal below 1 for test 9"));
    }
    SUBCASE("option pointing at a foreign question")
    {
        auto c = well_formed();
        c.options.push_back(AnswerOption{999, 42, "stray", false});
        auto report = validate_test(c.test, c.questions, c.options);
        CHECK(has_message(report, "option 999 references unknown question 42"));
    }
}

TEST_CASE("validate_test is order-insensitive and idempotent")
{
    std::mt19937 rng(20070101);
    for (int trial = 0; trial < 200; ++trial) {
        auto c = well_formed(1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 4));
        // Random damage so that both valid and invalid catalogs are covered.
        for (auto& o : c.options) {
            if (rng() % 5 == 0)
                o.is_correct = !o.is_correct;
        }
        for (auto& q : c.questions) {
            if (rng() % 7 == 0)
                q.position += 1;
        }
        const auto baseline = validate_test(c.test, c.questions, c.options);
        CHECK(validate_test(c.test, c.questions, c.options).violations == baseline.violations);

        std::shuffle(c.questions.begin(), c.questions.end(), rng);
        std::shuffle(c.options.begin(), c.options.end(), rng);
        CHECK(validate_test(c.test, c.questions, c.options).violations == baseline.violations);
    }
}

TEST_CASE("compute_score examples")
{
    CHECK(compute_score({}) == 0);

    std::vector<AnswerRecord> all_correct = {
        {1, 1, 3, true, 10}, {1, 2, 7, true, 11}, {1, 3, 9, true, 12}};
    CHECK(compute_score(all_correct) == 3);

    std::vector<AnswerRecord> mixed = {{1, 1, 2, false, 10}, {1, 2, 7, true, 11}};
    CHECK(compute_score(mixed) == 1);
}

TEST_CASE("compute_score counts correct records over every list up to length 8")
{
    for (int n = 0; n <= 8; ++n) {
        for (int mask = 0; mask < (1 << n); ++mask) {
            std::vector<AnswerRecord> records;
            int expected = 0;
            for (int i = 0; i < n; ++i) {
                const bool correct = (mask >> i) & 1;
                expected += correct;
                records.push_back({1, i + 1, 100 + i, correct, 0});
            }
            REQUIRE(compute_score(records) == expected);
        }
    }
}

TEST_CASE("compute_score matches the per-question oracle on all 64 answer vectors")
{
    const std::vector<int> key = {2, 0, 3};  // correct option index per question
    int vectors = 0;
    int total = 0;
    for_each_answer_vector(3, 4, [&](const std::vector<int>& chosen) {
        std::vector<AnswerRecord> records;
        for (int q = 0; q < 3; ++q)
            records.push_back({1, q + 1, 10 * (q + 1) + chosen[q], chosen[q] == key[q], 0});
        const auto score = compute_score(records);
        CHECK(score == oracle_score(chosen, key));
        total += static_cast<int>(score);
        ++vectors;
    });
    CHECK(vectors == 64);
    // Each question is right in 16 of the 64 vectors: 3 * 16 / 64.
    CHECK(static_cast<double>(total) / vectors == 0.75);
}

TEST_CASE("TestResult invariants")
{
    TestResult ok{0, 1, 1, std::nullopt, 2, 3, 3, 100, 160, Outcome::Completed};
    CHECK(satisfies_invariants(ok));

    auto bad = ok;
    bad.score = 4;
    CHECK_FALSE(satisfies_invariants(bad));
    bad = ok;
    bad.answered_count = 4;
    CHECK_FALSE(satisfies_invariants(bad));
    bad = ok;
    bad.finished_at = 99;
    CHECK_FALSE(satisfies_invariants(bad));
    bad = ok;
    bad.total_questions = 0;
    bad.answered_count = 0;
    bad.score = 0;
    CHECK_FALSE(satisfies_invariants(bad));

    TestResult expired_empty{0, 1, 1, std::nullopt, 0, 3, 0, 100, 100, Outcome::Expired};
    CHECK(satisfies_invariants(expired_empty));
}

TEST_CASE("enum text forms")
{
    CHECK(parse_role("supervisor") == Role::Supervisor);
    CHECK(parse_role("regular") == Role::Regular);
    CHECK_FALSE(parse_role("admin"));
    CHECK(parse_outcome(to_string(Outcome::Expired)) == Outcome::Expired);
    CHECK(parse_entity_kind("option") == EntityKind::AnswerOption);
}
