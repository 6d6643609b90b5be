#include "overuse/classifier.hpp"
#include "overuse/util.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <stdexcept>

namespace overuse {

using json = nlohmann::ordered_json;

const char* to_string(OveruseKind kind) {
    switch (kind) {
        case OveruseKind::NoTool: return "no_tool";
        case OveruseKind::Irrelevant: return "irrelevant";
        case OveruseKind::Redundant: return "redundant";
        case OveruseKind::Justified: return "justified";
    }
    return "no_tool";
}

OveruseLabel classify(const Trajectory& traj, const KnowledgeProfile& profile,
                      const QueryRecord& query, double redundancy_threshold) {
    if (traj.query_id != profile.query_id || traj.query_id != query.query_id)
        throw std::invalid_argument("classify: mismatched query ids ('" + traj.query_id + "', '" +
                                    profile.query_id + "', '" + query.query_id + "')");
    if (!(redundancy_threshold >= 0.0 && redundancy_threshold <= 1.0))
        throw std::invalid_argument("classify: threshold outside [0, 1]");

    OveruseLabel label;
    label.availability = profile.avg_at_k;
    if (traj.tool_call_count == 0) {
        label.kind = OveruseKind::NoTool;
        return label;
    }
    if (query.relevant_tools) {
        for (const Turn& t : traj.turns) {
            if (t.kind != TurnKind::tool_call) continue;
            if (!query.relevant_tools->contains(t.tool_name))
                label.offending_tools.push_back(t.tool_name);
        }
        if (!label.offending_tools.empty()) {
            label.kind = OveruseKind::Irrelevant;
            return label;
        }
    }
    label.kind = profile.avg_at_k >= redundancy_threshold ? OveruseKind::Redundant
                                                          : OveruseKind::Justified;
    return label;
}

double irrelevance_detection_score(const std::vector<Trajectory>& trajs,
                                   const QueryCorpus& corpus) {
    if (trajs.empty())
        throw std::invalid_argument("irrelevance_detection_score: no trajectories in scope");
    std::size_t refrained = 0;
    for (const Trajectory& t : trajs) {
        const QueryRecord* q = corpus.find(t.query_id);
        if (!q)
            throw std::invalid_argument("irrelevance_detection_score: unknown query_id '" +
                                        t.query_id + "'");
        if (!q->relevant_tools || !q->relevant_tools->empty())
            throw std::invalid_argument(
                "irrelevance_detection_score: query '" + t.query_id +
                "' does not declare an all-irrelevant (empty) tool set");
        if (t.tool_call_count == 0) ++refrained;
    }
    return static_cast<double>(refrained) / static_cast<double>(trajs.size());
}

double tool_frequency(const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw std::invalid_argument("tool_frequency: empty subset");
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_query;  // calls, samples
    for (const Trajectory& t : trajs) {
        auto& [calls, samples] = per_query[t.query_id];
        calls += t.tool_call_count;
        ++samples;
    }
    double sum = 0.0;
    for (const auto& [qid, cs] : per_query)
        sum += static_cast<double>(cs.first) / static_cast<double>(cs.second);
    return sum / static_cast<double>(per_query.size());
}

void write_labels_jsonl(const std::string& path, const std::vector<LabeledTrajectory>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& l : labels) {
        json j;
        j["query_id"] = l.query_id;
        j["sample_index"] = l.sample_index;
        j["label"] = to_string(l.label.kind);
        j["availability"] = l.label.availability;
        if (!l.label.offending_tools.empty()) j["offending_tools"] = l.label.offending_tools;
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace overuse
