#pragma once

#include "grila/auth.hpp"
#include "grila/domain_model.hpp"
#include "grila/persistence.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace grila {

struct QuestionDraft {
    Question question;
    std::vector<AnswerOption> options;
};

/// A test with all of its questions and options, authored as one unit.
struct TestBundle {
    Test test;
    std::vector<QuestionDraft> questions;
};

/// Validates a bundle that may not have ids yet: unset ids get provisional
/// ones (question ids follow their position) so violations can name them.
ValidationReport validate_bundle(const TestBundle& bundle);

using CatalogEntity = std::variant<Domain, Subdomain, Test, Question, AnswerOption>;

/// Supervisor operations. Every call with a non-supervisor principal fails
/// with Forbidden before touching the store.
class AdminService {
public:
    AdminService(Store& store, AuthService& auth) : store_(store), auth_(auth) {}

    Id create_domain(const Principal& p, const Domain& domain);
    Id create_subdomain(const Principal& p, const Subdomain& subdomain);
    Id create_test(const Principal& p, const TestBundle& bundle);
    TestBundle get_test_bundle(const Principal& p, Id test_id);

    /// Applies `patch` (JSON merge-patch over the entity's wire form) and
    /// persists the result if the containing test still validates. A question
    /// patch may carry "correct_option_id" to move the correct answer.
    CatalogEntity update_registration(const Principal& p, EntityKind kind, Id id,
                                      const nlohmann::json& patch);

    std::int64_t delete_test(const Principal& p, Id test_id);
    /// Deletes a domain or subdomain and everything below it.
    std::int64_t delete_registration(const Principal& p, EntityKind kind, Id id);

    std::vector<std::pair<std::string, TestResult>> list_all_results(const Principal& p,
                                                                     std::optional<Id> user_id);
    void delete_user_result(const Principal& p, Id result_id);

    std::vector<UserAccount> list_users(const Principal& p);
    UserAccount set_user_active(const Principal& p, Id user_id, bool active);

private:
    Store& store_;
    AuthService& auth_;
};

struct SeedReport {
    Id domain_id = 0;
    std::int64_t subdomains = 0;
    std::int64_t tests = 0;
    std::int64_t questions = 0;
    std::int64_t options = 0;
};

/// Imports one domain tree:
/// {"domain": name, "subdomains": [{"name", "tests": [bundle without subdomain_id]}]}.
/// Domain and subdomains are matched by name and created when missing. Every
/// test is validated before anything is written; any violation aborts the
/// whole import with ValidationFailed.
SeedReport import_seed(Store& store, const nlohmann::json& tree);

} // namespace grila
