#pragma once

#include "overuse/trajectory.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace overuse {

// Per-query internal-knowledge availability statistics.
struct KnowledgeProfile {
    std::string query_id;
    std::size_t k_no_tool = 0;     // number of tool-free samples behind avg_at_k
    double avg_at_k = 0.0;         // fraction of correct tool-free samples
    double entropy_bits = 0.0;     // answer disagreement, 0..log2(k_no_tool)
    int bin_index = 0;             // 0..10, see assign_bin
    std::optional<double> avg_at_k_with_tool;
    std::optional<double> mean_tool_calls;
    std::optional<double> tool_at_k;  // absent when no with-tool rollout is correct
};

struct BinSummary {
    int bin_index = 0;
    std::size_t query_count = 0;
    std::optional<double> mean_entropy_bits;
    std::optional<double> mean_avg_at_k_with_tool;
    std::optional<double> mean_tool_calls;
};

enum class Partition { Simple, Complex };
enum class ToolAtKAgg { max, min };

constexpr int kBinCount = 11;

// Fraction of true outcomes. Errors on an empty list.
double avg_at_k(const std::vector<bool>& outcomes);

// Shannon entropy (bits) of the empirical distribution over normalized
// answers. Errors on an empty list.
double answer_entropy(const std::vector<std::string>& answers);
double entropy_from_counts(const std::vector<std::size_t>& counts);

// Simple iff avg@8 >= 0.5. The split is defined for k = 8 only.
Partition partition_simple_complex(const KnowledgeProfile& profile);

// Bin 0 holds exactly avg == 0; bins 1..10 are the half-open intervals
// ((i-1)/10, i/10]. Errors outside [0, 1].
int assign_bin(double avg_at_k_value);

// Per-query tool@k: max (or min) tool_call_count over correct rollouts of
// one query; absent when none is correct. All inputs must share a query_id
// and have mode == with_tool.
std::optional<double> tool_at_k(const std::vector<Trajectory>& trajectories,
                                ToolAtKAgg agg = ToolAtKAgg::max);

// Mean of per-query tool@k over queries where it is defined.
std::optional<double> corpus_tool_at_k(const std::vector<KnowledgeProfile>& profiles);

struct ProfileBuildResult {
    std::vector<KnowledgeProfile> profiles;        // ordered by first appearance
    std::vector<std::string> skipped_query_ids;    // no tool-free samples
};

ProfileBuildResult build_profiles(const std::vector<Trajectory>& no_tool_trajs,
                                  const std::vector<Trajectory>& with_tool_trajs,
                                  const QueryCorpus& corpus,
                                  ToolAtKAgg agg = ToolAtKAgg::max);

// Always returns 11 summaries, empty bins with count 0 and absent means.
std::vector<BinSummary> bin_summaries(const std::vector<KnowledgeProfile>& profiles);

// --- streaming profiling ------------------------------------------------------
//
// Accumulates profile statistics directly from JSONL lines so that corpora of
// tens of millions of rollouts never materialize in memory. Produces exactly
// the same profiles as build_profiles over the ingested equivalents.
struct QueryAccum {
    std::size_t no_tool_n = 0;
    std::size_t no_tool_correct = 0;
    std::unordered_map<std::string, std::size_t> answer_counts;  // normalized key -> count
    std::size_t with_tool_n = 0;
    std::size_t with_tool_correct = 0;
    std::size_t call_sum = 0;
    std::optional<std::size_t> agg_calls_correct;

    void add_no_tool(const Trajectory& t);
    void add_with_tool(const Trajectory& t, ToolAtKAgg agg);
    void merge(const QueryAccum& other, ToolAtKAgg agg);
};

class StreamingProfiler {
  public:
    explicit StreamingProfiler(const QueryCorpus& corpus, ToolAtKAgg agg = ToolAtKAgg::max);

    // Consume one tool-free / tool-augmented rollout file. `workers` follows
    // worker_count(); errors carry path:line context.
    void consume_no_tool_file(const std::string& path, std::size_t workers = 0);
    void consume_with_tool_file(const std::string& path, std::size_t workers = 0);

    ProfileBuildResult finalize() const;

  private:
    void consume_file(const std::string& path, RolloutMode expected_mode, std::size_t workers);

    const QueryCorpus& corpus_;
    ToolAtKAgg agg_;
    std::unordered_map<std::string, QueryAccum> accums_;
};

// --- persistence ---------------------------------------------------------------

void write_profiles_jsonl(const std::string& path, const std::vector<KnowledgeProfile>& profiles);
std::vector<KnowledgeProfile> read_profiles_jsonl(const std::string& path);

void write_bins_csv(const std::string& path, const std::vector<BinSummary>& bins);
std::vector<BinSummary> read_bins_csv(const std::string& path);

}  // namespace overuse
