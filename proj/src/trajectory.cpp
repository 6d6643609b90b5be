#include "overuse/trajectory.hpp"
#include "overuse/jsonl.hpp"
#include "overuse/util.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace overuse {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

json parse_line(const std::string& path, std::size_t line_no, std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail_line(path, line_no, "malformed JSON object");
    return j;
}

std::string require_string(const json& j, const char* key, const std::string& path,
                           std::size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        fail_line(path, line_no, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

TurnKind turn_kind_from(const std::string& s, const std::string& path, std::size_t line_no) {
    if (s == "generation") return TurnKind::generation;
    if (s == "tool_call") return TurnKind::tool_call;
    if (s == "tool_result") return TurnKind::tool_result;
    fail_line(path, line_no, "unknown turn kind '" + s + "'");
}

}  // namespace

const char* to_string(RolloutMode mode) {
    return mode == RolloutMode::with_tool ? "with_tool" : "no_tool";
}

const char* to_string(TurnKind kind) {
    switch (kind) {
        case TurnKind::generation: return "generation";
        case TurnKind::tool_call: return "tool_call";
        case TurnKind::tool_result: return "tool_result";
    }
    return "generation";
}

QueryCorpus::QueryCorpus(std::vector<QueryRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        auto [it, inserted] = index_.emplace(records_[i].query_id, i);
        if (!inserted)
            throw std::runtime_error("duplicate query_id '" + records_[i].query_id + "'");
    }
}

const QueryRecord* QueryCorpus::find(std::string_view query_id) const {
    auto it = index_.find(std::string(query_id));
    return it == index_.end() ? nullptr : &records_[it->second];
}

// --- answer normalization ----------------------------------------------------

NormalizedAnswer normalize_answer(std::string_view raw) {
    std::string_view s = trim(raw);
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    NormalizedAnswer out;
    out.text.reserve(s.size());
    for (char c : s) out.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    out.is_number = parse_finite_number(out.text, out.value);
    return out;
}

std::string normalized_key(std::string_view raw) {
    NormalizedAnswer n = normalize_answer(raw);
    if (!n.is_number) return n.text;
    return format_number(n.value, 17);
}

bool answers_equivalent(std::string_view candidate, std::string_view gold) {
    NormalizedAnswer a = normalize_answer(candidate);
    NormalizedAnswer b = normalize_answer(gold);
    if (a.is_number && b.is_number) return std::fabs(a.value - b.value) <= 1e-9;
    return a.text == b.text;
}

// --- ingestion ---------------------------------------------------------------

namespace {

QueryRecord query_from_json(const json& j, const std::string& path, std::size_t line_no) {
    QueryRecord q;
    q.query_id = require_string(j, "query_id", path, line_no);
    if (q.query_id.empty()) fail_line(path, line_no, "empty query_id");
    q.benchmark = require_string(j, "benchmark", path, line_no);
    q.prompt = require_string(j, "prompt", path, line_no);
    q.gold_answer = require_string(j, "gold_answer", path, line_no);
    if (q.gold_answer.empty()) fail_line(path, line_no, "empty gold_answer");
    if (auto it = j.find("relevant_tools"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) fail_line(path, line_no, "relevant_tools must be an array");
        std::set<std::string> tools;
        for (const auto& t : *it) {
            if (!t.is_string()) fail_line(path, line_no, "relevant_tools entries must be strings");
            tools.insert(t.get<std::string>());
        }
        q.relevant_tools = std::move(tools);
    }
    return q;
}

Trajectory trajectory_from_json(const json& j, const std::string& path, std::size_t line_no) {
    Trajectory t;
    t.query_id = require_string(j, "query_id", path, line_no);
    std::string mode = require_string(j, "mode", path, line_no);
    if (mode == "with_tool") t.mode = RolloutMode::with_tool;
    else if (mode == "no_tool") t.mode = RolloutMode::no_tool;
    else fail_line(path, line_no, "unknown mode '" + mode + "'");

    auto si = j.find("sample_index");
    if (si == j.end() || !si->is_number_unsigned())
        fail_line(path, line_no, "missing or negative sample_index");
    t.sample_index = si->get<std::size_t>();

    auto turns = j.find("turns");
    if (turns == j.end() || !turns->is_array()) fail_line(path, line_no, "missing turns array");
    std::ptrdiff_t last_call = -1, last_result = -1;
    for (const auto& tj : *turns) {
        if (!tj.is_object()) fail_line(path, line_no, "turn entries must be objects");
        Turn turn;
        turn.kind = turn_kind_from(require_string(tj, "kind", path, line_no), path, line_no);
        if (auto it = tj.find("text"); it != tj.end() && it->is_string())
            turn.text = it->get<std::string>();
        if (auto it = tj.find("tool_name"); it != tj.end() && it->is_string())
            turn.tool_name = it->get<std::string>();
        if (auto it = tj.find("tool_args"); it != tj.end() && it->is_string())
            turn.tool_args = it->get<std::string>();
        if (turn.kind == TurnKind::tool_call) {
            if (turn.tool_name.empty()) fail_line(path, line_no, "tool_call turn without tool_name");
            last_call = static_cast<std::ptrdiff_t>(t.turns.size());
            ++t.tool_call_count;
        } else if (!turn.tool_name.empty()) {
            fail_line(path, line_no, "tool_name on a non-tool_call turn");
        } else if (turn.kind == TurnKind::tool_result) {
            last_result = static_cast<std::ptrdiff_t>(t.turns.size());
        }
        t.turns.push_back(std::move(turn));
    }
    t.truncated = last_call >= 0 && last_call > last_result;

    if (t.mode == RolloutMode::no_tool && t.tool_call_count > 0)
        fail_line(path, line_no,
                  "no_tool trajectory for query '" + t.query_id + "' contains tool_call turns");

    auto fa = j.find("final_answer");
    if (fa == j.end() || !fa->is_string()) fail_line(path, line_no, "missing final_answer");
    t.final_answer = fa->get<std::string>();
    return t;
}

}  // namespace

std::vector<QueryRecord> ingest_queries(const std::string& path) {
    std::vector<QueryRecord> out;
    for_each_line(path, [&](std::size_t line_no, std::string_view line) {
        QueryRecord q = query_from_json(parse_line(path, line_no, line), path, line_no);
        out.push_back(std::move(q));
    });
    // QueryCorpus construction is the duplicate check; reuse it here so the
    // error message is identical on both paths.
    QueryCorpus corpus(out);
    return out;
}

Trajectory parse_trajectory_line(std::string_view line, const QueryCorpus* corpus,
                                 bool require_correct, const std::string& path,
                                 std::size_t line_no) {
    json j = parse_line(path, line_no, line);
    Trajectory t = trajectory_from_json(j, path, line_no);
    const QueryRecord* q = nullptr;
    if (corpus) {
        q = corpus->find(t.query_id);
        if (!q) fail_line(path, line_no, "unknown query_id '" + t.query_id + "'");
    }
    if (auto it = j.find("correct"); it != j.end() && it->is_boolean()) {
        t.correct = it->get<bool>();
    } else if (q) {
        t.correct = answers_equivalent(t.final_answer, q->gold_answer);
    } else if (require_correct) {
        fail_line(path, line_no,
                  "record lacks 'correct' and no query corpus was supplied to derive it");
    }
    return t;
}

std::vector<Trajectory> ingest_trajectories(const std::string& path, const QueryCorpus& corpus) {
    std::vector<Trajectory> out;
    for_each_line(path, [&](std::size_t line_no, std::string_view line) {
        out.push_back(parse_trajectory_line(line, &corpus, false, path, line_no));
    });
    return out;
}

std::vector<Trajectory> load_trajectories(const std::string& path, bool require_correct) {
    std::vector<Trajectory> out;
    for_each_line(path, [&](std::size_t line_no, std::string_view line) {
        out.push_back(parse_trajectory_line(line, nullptr, require_correct, path, line_no));
    });
    return out;
}

// --- serialization -------------------------------------------------------------

std::string to_jsonl(const QueryRecord& query) {
    json j;
    j["query_id"] = query.query_id;
    j["benchmark"] = query.benchmark;
    j["prompt"] = query.prompt;
    j["gold_answer"] = query.gold_answer;
    if (query.relevant_tools) j["relevant_tools"] = *query.relevant_tools;
    return j.dump();
}

std::string to_jsonl(const Trajectory& traj) {
    json j;
    j["query_id"] = traj.query_id;
    j["mode"] = to_string(traj.mode);
    j["sample_index"] = traj.sample_index;
    json turns = json::array();
    for (const Turn& t : traj.turns) {
        json tj;
        tj["kind"] = to_string(t.kind);
        if (t.kind == TurnKind::tool_call) {
            tj["tool_name"] = t.tool_name;
            tj["tool_args"] = t.tool_args;
        } else {
            tj["text"] = t.text;
        }
        turns.push_back(std::move(tj));
    }
    j["turns"] = std::move(turns);
    j["final_answer"] = traj.final_answer;
    j["correct"] = traj.correct;
    return j.dump();
}

namespace {

template <typename T>
void write_lines(const std::string& path, const std::vector<T>& items) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const T& item : items) out << to_jsonl(item) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_queries_jsonl(const std::string& path, const std::vector<QueryRecord>& queries) {
    write_lines(path, queries);
}

void write_trajectories_jsonl(const std::string& path, const std::vector<Trajectory>& trajs) {
    write_lines(path, trajs);
}

}  // namespace overuse
