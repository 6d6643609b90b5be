#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace overuse {

// One benchmark question. relevant_tools semantics:
//   absent   -> tool relevance unknown
//   empty    -> every provided tool is irrelevant (BFCL-style scenario)
//   nonempty -> exactly these tool names are relevant
struct QueryRecord {
    std::string query_id;
    std::string benchmark;
    std::string prompt;
    std::string gold_answer;
    std::optional<std::set<std::string>> relevant_tools;
};

enum class TurnKind { generation, tool_call, tool_result };

struct Turn {
    TurnKind kind = TurnKind::generation;
    std::string text;       // generation / tool_result payload
    std::string tool_name;  // tool_call only, non-empty there
    std::string tool_args;  // tool_call only, opaque
};

enum class RolloutMode { with_tool, no_tool };

// One sampled rollout. correct is the stored verdict; truncated marks a
// tool_call with no later tool_result. Downstream metrics treat truncated
// rollouts as incorrect regardless of the stored verdict.
struct Trajectory {
    std::string query_id;
    RolloutMode mode = RolloutMode::no_tool;
    std::size_t sample_index = 0;
    std::vector<Turn> turns;
    std::string final_answer;
    bool correct = false;
    bool truncated = false;
    std::size_t tool_call_count = 0;  // derived from turns

    bool counts_correct() const { return correct && !truncated; }
};

// Queries with an id index; ids are unique.
class QueryCorpus {
  public:
    QueryCorpus() = default;
    explicit QueryCorpus(std::vector<QueryRecord> records);

    const std::vector<QueryRecord>& records() const { return records_; }
    const QueryRecord* find(std::string_view query_id) const;
    bool contains(std::string_view query_id) const { return find(query_id) != nullptr; }
    std::size_t size() const { return records_.size(); }

  private:
    std::vector<QueryRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

// --- answer normalization -------------------------------------------------

// Normalized answer: trimmed, one trailing period stripped, case-folded,
// with a parsed value when the result is a finite decimal number.
struct NormalizedAnswer {
    std::string text;
    bool is_number = false;
    double value = 0.0;
};

NormalizedAnswer normalize_answer(std::string_view raw);

// Canonical histogram key: numbers collapse to their shortest round-trip
// form ("4.0", " 4 " and "4" coincide), everything else to the folded text.
std::string normalized_key(std::string_view raw);

// True iff the normalized forms match; numbers compare with absolute
// tolerance 1e-9, other strings byte-wise.
bool answers_equivalent(std::string_view candidate, std::string_view gold);

// --- ingestion -------------------------------------------------------------

// Reads queries.jsonl. Malformed lines and duplicate ids throw with the
// offending line number / id in the message.
std::vector<QueryRecord> ingest_queries(const std::string& path);

// Reads trajectories.jsonl against a corpus. Derives tool_call_count and
// the truncated flag; computes `correct` from the gold answer when the
// field is absent. Unknown query ids and mode/turn violations throw.
std::vector<Trajectory> ingest_trajectories(const std::string& path, const QueryCorpus& corpus);

// Corpus-free variant for subcommands that only need rollouts. Every record
// must carry an explicit `correct` unless `require_correct` is false.
std::vector<Trajectory> load_trajectories(const std::string& path, bool require_correct = true);

// Single-line parser behind the ingestion entry points; exposed for
// streaming consumers. With a corpus, validates the query id and derives
// `correct` from the gold answer when absent; without one, requires the
// field if require_correct is set.
Trajectory parse_trajectory_line(std::string_view line, const QueryCorpus* corpus,
                                 bool require_correct, const std::string& path,
                                 std::size_t line_no);

// --- serialization ----------------------------------------------------------

// One JSONL line, schema-exact: {query_id, benchmark, prompt, gold_answer,
// relevant_tools?} / {query_id, mode, sample_index, turns, final_answer, correct}.
std::string to_jsonl(const QueryRecord& query);
std::string to_jsonl(const Trajectory& traj);

void write_queries_jsonl(const std::string& path, const std::vector<QueryRecord>& queries);
void write_trajectories_jsonl(const std::string& path, const std::vector<Trajectory>& trajs);

const char* to_string(RolloutMode mode);
const char* to_string(TurnKind kind);

}  // namespace overuse
