#include "grila/admin_service.hpp"

#include "grila/error.hpp"
#include "grila/json_codec.hpp"

#include <algorithm>

namespace grila {

namespace {

void require_supervisor(const Principal& p)
{
    if (p.role != Role::Supervisor)
        throw Error(ErrorCode::Forbidden, "supervisor role required");
}

[[noreturn]] void unknown_entity(EntityKind kind, Id id)
{
    throw Error(ErrorCode::UnknownEntity,
                "unknown " + std::string(to_string(kind)) + " " + std::to_string(id));
}

void require_valid(const ValidationReport& report)
{
    if (!report.ok())
        throw Error(ErrorCode::ValidationFailed, report.summary());
}

bool blank(const std::string& s)
{
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

Id insert_bundle(Store& store, const TestBundle& bundle)
{
    return store.transact([&] {
        Test test = bundle.test;
        test.id = 0;
        const Id test_id = put_entity(store, test);
        for (const auto& draft : bundle.questions) {
            Question q = draft.question;
            q.id = 0;
            q.test_id = test_id;
            const Id question_id = put_entity(store, q);
            for (AnswerOption o : draft.options) {
                o.id = 0;
                o.question_id = question_id;
                put_entity(store, o);
            }
        }
        return test_id;
    });
}

template <typename T>
T merged(const T& current, const json& patch)
{
    json j = current;
    j.merge_patch(patch);
    j["id"] = current.id;
    return decode([&] { return j.get<T>(); });
}

void validate_containing_test(Store& store, Id test_id, const std::vector<Question>& questions,
                              const std::vector<AnswerOption>& options)
{
    auto test = get_entity<Test>(store, test_id);
    if (!test)
        unknown_entity(EntityKind::Test, test_id);
    require_valid(validate_test(*test, questions, options));
}

} // namespace

ValidationReport validate_bundle(const TestBundle& bundle)
{
    Test test = bundle.test;
    std::vector<Question> questions;
    std::vector<AnswerOption> options;
    Id next_option = 1;
    for (std::size_t i = 0; i < bundle.questions.size(); ++i) {
        Question q = bundle.questions[i].question;
        if (q.id == 0)
            q.id = static_cast<Id>(i) + 1;
        q.test_id = test.id;
        for (AnswerOption o : bundle.questions[i].options) {
            if (o.id == 0)
                o.id = next_option;
            ++next_option;
            o.question_id = q.id;
            options.push_back(std::move(o));
        }
        questions.push_back(std::move(q));
    }
    return validate_test(test, questions, options);
}

Id AdminService::create_domain(const Principal& p, const Domain& domain)
{
    require_supervisor(p);
    if (blank(domain.name))
        throw Error(ErrorCode::ValidationFailed, "domain name must not be empty");
    return put_entity(store_, Domain{0, domain.name});
}

Id AdminService::create_subdomain(const Principal& p, const Subdomain& subdomain)
{
    require_supervisor(p);
    if (blank(subdomain.name))
        throw Error(ErrorCode::ValidationFailed, "subdomain name must not be empty");
    return put_entity(store_, Subdomain{0, subdomain.domain_id, subdomain.name});
}

Id AdminService::create_test(const Principal& p, const TestBundle& bundle)
{
    require_supervisor(p);
    require_valid(validate_bundle(bundle));
    return insert_bundle(store_, bundle);
}

TestBundle AdminService::get_test_bundle(const Principal& p, Id test_id)
{
    require_supervisor(p);
    return store_.transact([&] {
        auto test = get_entity<Test>(store_, test_id);
        if (!test)
            unknown_entity(EntityKind::Test, test_id);
        TestBundle bundle{*test, {}};
        for (const auto& q : list_questions(store_, test_id))
            bundle.questions.push_back({q, list_options(store_, q.id)});
        return bundle;
    });
}

CatalogEntity AdminService::update_registration(const Principal& p, EntityKind kind, Id id,
                                                const json& patch)
{
    require_supervisor(p);
    if (!patch.is_object())
        throw Error(ErrorCode::BadRequest, "patch must be a JSON object");

    return store_.transact([&]() -> CatalogEntity {
        switch (kind) {
        case EntityKind::Domain: {
            auto current = get_entity<Domain>(store_, id);
            if (!current)
                unknown_entity(kind, id);
            auto updated = merged(*current, patch);
            if (blank(updated.name))
                throw Error(ErrorCode::ValidationFailed, "domain name must not be empty");
            put_entity(store_, updated);
            return updated;
        }
        case EntityKind::Subdomain: {
            auto current = get_entity<Subdomain>(store_, id);
            if (!current)
                unknown_entity(kind, id);
            auto updated = merged(*current, patch);
            if (blank(updated.name))
                throw Error(ErrorCode::ValidationFailed, "subdomain name must not be empty");
            put_entity(store_, updated);
            return updated;
        }
        case EntityKind::Test: {
            auto current = get_entity<Test>(store_, id);
            if (!current)
                unknown_entity(kind, id);
            auto updated = merged(*current, patch);
            require_valid(
                validate_test(updated, list_questions(store_, id), list_test_options(store_, id)));
            put_entity(store_, updated);
            return updated;
        }
        case EntityKind::Question: {
            auto current = get_entity<Question>(store_, id);
            if (!current)
                unknown_entity(kind, id);
            json fields = patch;
            std::optional<Id> correct_option;
            if (fields.contains("correct_option_id")) {
                correct_option = decode([&] { return fields.at("correct_option_id").get<Id>(); });
                fields.erase("correct_option_id");
            }
            auto updated = merged(*current, fields);
            if (updated.test_id != current->test_id)
                throw Error(ErrorCode::ValidationFailed, "a question cannot move to another test");

            auto questions = list_questions(store_, updated.test_id);
            std::replace(questions.begin(), questions.end(), *current, updated);
            auto options = list_test_options(store_, updated.test_id);
            std::vector<AnswerOption> changed;
            if (correct_option) {
                bool found = false;
                for (auto& o : options) {
                    if (o.question_id != id)
                        continue;
                    found = found || o.id == *correct_option;
                    if (o.is_correct != (o.id == *correct_option)) {
                        o.is_correct = o.id == *correct_option;
                        changed.push_back(o);
                    }
                }
                if (!found) {
                    throw Error(ErrorCode::ValidationFailed,
                                "option " + std::to_string(*correct_option) +
                                    " is not an option of question " + std::to_string(id));
                }
            }
            validate_containing_test(store_, updated.test_id, questions, options);
            put_entity(store_, updated);
            for (const auto& o : changed)
                put_entity(store_, o);
            return updated;
        }
        case EntityKind::AnswerOption: {
            auto current = get_entity<AnswerOption>(store_, id);
            if (!current)
                unknown_entity(kind, id);
            auto updated = merged(*current, patch);
            if (updated.question_id != current->question_id)
                throw Error(ErrorCode::ValidationFailed, "an option cannot move to another question");
            auto question = get_entity<Question>(store_, current->question_id);
            if (!question)
                unknown_entity(EntityKind::Question, current->question_id);
            auto options = list_test_options(store_, question->test_id);
            std::replace(options.begin(), options.end(), *current, updated);
            validate_containing_test(store_, question->test_id,
                                     list_questions(store_, question->test_id), options);
            put_entity(store_, updated);
            return updated;
        }
        }
        unknown_entity(kind, id);
    });
}

std::int64_t AdminService::delete_test(const Principal& p, Id test_id)
{
    return delete_registration(p, EntityKind::Test, test_id);
}

std::int64_t AdminService::delete_registration(const Principal& p, EntityKind kind, Id id)
{
    require_supervisor(p);
    return store_.transact([&] {
        bool exists = false;
        switch (kind) {
        case EntityKind::Domain: exists = get_entity<Domain>(store_, id).has_value(); break;
        case EntityKind::Subdomain: exists = get_entity<Subdomain>(store_, id).has_value(); break;
        case EntityKind::Test: exists = get_entity<Test>(store_, id).has_value(); break;
        default:
            throw Error(ErrorCode::BadRequest,
                        "questions and options are removed through their test");
        }
        if (!exists)
            unknown_entity(kind, id);
        return delete_entity(store_, kind, id);
    });
}

std::vector<std::pair<std::string, TestResult>>
AdminService::list_all_results(const Principal& p, std::optional<Id> user_id)
{
    require_supervisor(p);
    return grila::list_all_results(store_, user_id);
}

void AdminService::delete_user_result(const Principal& p, Id result_id)
{
    require_supervisor(p);
    store_.transaction([&] {
        if (!get_result(store_, result_id))
            throw Error(ErrorCode::UnknownResult, "unknown result " + std::to_string(result_id));
        delete_result(store_, result_id);
    });
}

std::vector<UserAccount> AdminService::list_users(const Principal& p)
{
    require_supervisor(p);
    return grila::list_users(store_);
}

UserAccount AdminService::set_user_active(const Principal& p, Id user_id, bool active)
{
    require_supervisor(p);
    if (user_id == p.user_id && !active)
        throw Error(ErrorCode::BadRequest, "supervisors cannot deactivate their own account");
    return store_.transact([&] {
        auth_.set_active(user_id, active);
        return *get_user(store_, user_id);
    });
}

SeedReport import_seed(Store& store, const json& tree)
{
    struct SubdomainSeed {
        std::string name;
        std::vector<TestBundle> tests;
    };

    const auto [domain_name, subdomains] = decode([&] {
        std::vector<SubdomainSeed> subs;
        for (const auto& s : tree.at("subdomains")) {
            SubdomainSeed seed{s.at("name").get<std::string>(), {}};
            for (const auto& t : s.at("tests"))
                seed.tests.push_back(t.get<TestBundle>());
            subs.push_back(std::move(seed));
        }
        return std::make_pair(tree.at("domain").get<std::string>(), std::move(subs));
    });

    if (blank(domain_name))
        throw Error(ErrorCode::ValidationFailed, "domain name must not be empty");
    std::string problems;
    for (const auto& sub : subdomains) {
        if (blank(sub.name))
            problems += (problems.empty() ? "" : "; ") + std::string("empty subdomain name");
        for (const auto& bundle : sub.tests) {
            auto report = validate_bundle(bundle);
            if (!report.ok()) {
                problems += (problems.empty() ? "" : "; ") + sub.name + " / " + bundle.test.title +
                            ": " + report.summary();
            }
        }
    }
    if (!problems.empty())
        throw Error(ErrorCode::ValidationFailed, problems);

    return store.transact([&] {
        SeedReport report;
        const auto domains = list_domains(store);
        auto domain = std::find_if(domains.begin(), domains.end(),
                                   [&](const Domain& d) { return d.name == domain_name; });
        report.domain_id =
            domain != domains.end() ? domain->id : put_entity(store, Domain{0, domain_name});

        for (const auto& sub : subdomains) {
            const auto existing = list_subdomains(store, report.domain_id);
            auto it = std::find_if(existing.begin(), existing.end(),
                                   [&](const Subdomain& s) { return s.name == sub.name; });
            Id subdomain_id = 0;
            if (it != existing.end()) {
                subdomain_id = it->id;
            } else {
                subdomain_id = put_entity(store, Subdomain{0, report.domain_id, sub.name});
                ++report.subdomains;
            }
            for (auto bundle : sub.tests) {
                bundle.test.subdomain_id = subdomain_id;
                insert_bundle(store, bundle);
                ++report.tests;
                for (const auto& q : bundle.questions) {
                    ++report.questions;
                    report.options += static_cast<std::int64_t>(q.options.size());
                }
            }
        }
        return report;
    });
}

} // namespace grila
