#include "grila/json_codec.hpp"

namespace grila {

void to_json(json& j, const Domain& d)
{
    j = {{"id", d.id}, {"name", d.name}};
}

void to_json(json& j, const Subdomain& s)
{
    j = {{"id", s.id}, {"domain_id", s.domain_id}, {"name", s.name}};
}

void to_json(json& j, const Test& t)
{
    j = {{"id", t.id},
         {"subdomain_id", t.subdomain_id},
         {"title", t.title},
         {"time_limit_seconds", t.time_limit_seconds},
         {"ordinal", t.ordinal}};
}

void to_json(json& j, const Question& q)
{
    j = {{"id", q.id}, {"test_id", q.test_id}, {"text", q.text}, {"position", q.position}};
}

void to_json(json& j, const AnswerOption& o)
{
    j = {{"id", o.id},
         {"question_id", o.question_id},
         {"text", o.text},
         {"is_correct", o.is_correct}};
}

void to_json(json& j, const UserAccount& u)
{
    j = {{"id", u.id},
         {"username", u.username},
         {"name", u.name},
         {"first_name", u.first_name},
         {"email", u.email},
         {"role", to_string(u.role)},
         {"active", u.active},
         {"created_at", u.created_at}};
}

void to_json(json& j, const TestResult& r)
{
    j = {{"id", r.id},
         {"user_id", r.user_id},
         {"test_id", r.test_id},
         {"score", r.score},
         {"total_questions", r.total_questions},
         {"answered_count", r.answered_count},
         {"started_at", r.started_at},
         {"finished_at", r.finished_at},
         {"outcome", to_string(r.outcome)}};
    j["session_id"] = r.session_id ? json(*r.session_id) : json(nullptr);
}

void to_json(json& j, const TestSession& s)
{
    j = {{"id", s.id},
         {"user_id", s.user_id},
         {"test_id", s.test_id},
         {"started_at", s.started_at},
         {"deadline", s.deadline},
         {"cursor", s.cursor},
         {"total_questions", s.total_questions},
         {"running_score", s.running_score},
         {"state", to_string(s.state)}};
}

void to_json(json& j, const QuestionView& v)
{
    json options = json::array();
    for (const auto& o : v.options)
        options.push_back({{"option_id", o.option_id}, {"text", o.text}});
    j = {{"session_id", v.session_id},
         {"text", v.text},
         {"position", v.position},
         {"total_questions", v.total_questions},
         {"options", std::move(options)},
         {"remaining_seconds", v.remaining_seconds},
         {"running_score", v.running_score}};
}

void to_json(json& j, const ExpiredNotice& n)
{
    j = {{"status", "expired"},
         {"message", "Time expired"},
         {"session_id", n.session_id},
         {"result_id", n.result_id},
         {"score", n.score},
         {"answered_count", n.answered_count}};
}

void to_json(json& j, const FinishedNotice& n)
{
    j = {{"status", "finished"},
         {"session_id", n.session_id},
         {"result_id", n.result_id},
         {"score", n.score}};
}

void to_json(json& j, const NextStep& step)
{
    std::visit(
        [&](const auto& value) {
            using T = std::decay_t<decltype(value)>;
            if constexpr (std::is_same_v<T, QuestionView>)
                j = {{"status", "question"}, {"question", value}};
            else
                j = value;
        },
        step);
}

void to_json(json& j, const AnswerOutcome& a)
{
    j = {{"running_score", a.running_score}, {"next", a.next}};
    j["correct"] = a.correct ? json(*a.correct) : json(nullptr);
}

std::string_view flag_code(FlagKind kind)
{
    switch (kind) {
    case FlagKind::None: return "none";
    case FlagKind::CorrectAnswer: return "correct_answer";
    case FlagKind::WrongChoice: return "wrong_choice";
    }
    return "none";
}

void to_json(json& j, const AnnotatedResult& r)
{
    json questions = json::array();
    for (const auto& q : r.questions) {
        json options = json::array();
        for (const auto& o : q.options) {
            json item = {{"option_id", o.option_id}, {"text", o.text}};
            if (o.flag == FlagKind::None) {
                item["flag"] = nullptr;
                item["flag_text"] = nullptr;
            } else {
                item["flag"] = flag_code(o.flag);
                item["flag_text"] = o.flag_text;
            }
            options.push_back(std::move(item));
        }
        json item = {{"position", q.position},
                     {"text", q.text},
                     {"correct_option_id", q.correct_option_id},
                     {"options", std::move(options)}};
        item["chosen_option_id"] = q.chosen_option_id ? json(*q.chosen_option_id) : json(nullptr);
        questions.push_back(std::move(item));
    }
    j = {{"result", r.result},
         {"test_title", r.test_title},
         {"username", r.username},
         {"name", r.name},
         {"first_name", r.first_name},
         {"score", r.result.score},
         {"score_header", r.score_header},
         {"questions", std::move(questions)}};
}

void to_json(json& j, const TestBundle& b)
{
    json questions = json::array();
    for (const auto& q : b.questions) {
        json item = q.question;
        item["options"] = q.options;
        questions.push_back(std::move(item));
    }
    j = b.test;
    j["questions"] = std::move(questions);
}

void to_json(json& j, const Violation& v)
{
    j = {{"kind", to_string(v.kind)}, {"entity_id", v.entity_id}, {"message", v.message}};
}

void from_json(const json& j, Domain& d)
{
    d.id = j.value("id", Id{0});
    d.name = j.at("name").get<std::string>();
}

void from_json(const json& j, Subdomain& s)
{
    s.id = j.value("id", Id{0});
    s.domain_id = j.at("domain_id").get<Id>();
    s.name = j.at("name").get<std::string>();
}

void from_json(const json& j, Test& t)
{
    t.id = j.value("id", Id{0});
    t.subdomain_id = j.value("subdomain_id", Id{0});
    t.title = j.at("title").get<std::string>();
    t.time_limit_seconds = j.at("time_limit_seconds").get<std::int64_t>();
    t.ordinal = j.value("ordinal", std::int64_t{1});
}

void from_json(const json& j, Question& q)
{
    q.id = j.value("id", Id{0});
    q.test_id = j.value("test_id", Id{0});
    q.text = j.at("text").get<std::string>();
    q.position = j.value("position", std::int64_t{0});
}

void from_json(const json& j, AnswerOption& o)
{
    o.id = j.value("id", Id{0});
    o.question_id = j.value("question_id", Id{0});
    o.text = j.at("text").get<std::string>();
    o.is_correct = j.value("is_correct", false);
}

void from_json(const json& j, TestBundle& b)
{
    b.test = j.get<Test>();
    b.questions.clear();
    const auto& questions = j.at("questions");
    if (!questions.is_array())
        throw Error(ErrorCode::BadRequest, "\"questions\" must be an array");
    for (std::size_t i = 0; i < questions.size(); ++i) {
        QuestionDraft draft;
        draft.question = questions[i].get<Question>();
        if (draft.question.position == 0)
            draft.question.position = static_cast<std::int64_t>(i) + 1;
        draft.options = questions[i].at("options").get<std::vector<AnswerOption>>();
        b.questions.push_back(std::move(draft));
    }
}

json parse_json(const std::string& text)
{
    auto parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded())
        throw Error(ErrorCode::BadRequest, "request body is not valid JSON");
    return parsed;
}

} // namespace grila
