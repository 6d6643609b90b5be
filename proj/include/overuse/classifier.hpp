#pragma once

#include "overuse/profiler.hpp"
#include "overuse/trajectory.hpp"

#include <string>
#include <vector>

namespace overuse {

enum class OveruseKind { NoTool, Irrelevant, Redundant, Justified };

struct OveruseLabel {
    OveruseKind kind = OveruseKind::NoTool;
    double availability = 0.0;                  // profile avg@k the verdict used
    std::vector<std::string> offending_tools;   // called tools outside relevant_tools
};

// Labels one rollout:
//   zero calls                                   -> NoTool
//   any call outside relevant_tools (when known) -> Irrelevant
//   avg@k >= threshold                           -> Redundant
//   otherwise                                    -> Justified
// Irrelevant takes precedence over Redundant. When relevant_tools is absent
// the Irrelevant verdict is never emitted. Throws on mismatched query ids or
// a threshold outside [0, 1].
OveruseLabel classify(const Trajectory& traj, const KnowledgeProfile& profile,
                      const QueryRecord& query, double redundancy_threshold = 0.8);

// Fraction of rollouts that refrain from calling any tool, over queries whose
// relevant_tools is the empty set. Throws if a query in scope has a non-empty
// or absent relevant_tools, or when no rollouts are in scope.
double irrelevance_detection_score(const std::vector<Trajectory>& trajs,
                                   const QueryCorpus& corpus);

// Mean over queries of the per-query mean tool_call_count. Throws on an
// empty subset.
double tool_frequency(const std::vector<Trajectory>& trajs);

const char* to_string(OveruseKind kind);

struct LabeledTrajectory {
    std::string query_id;
    std::size_t sample_index = 0;
    OveruseLabel label;
};

void write_labels_jsonl(const std::string& path, const std::vector<LabeledTrajectory>& labels);

}  // namespace overuse
