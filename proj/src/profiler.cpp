#include "overuse/profiler.hpp"
#include "overuse/jsonl.hpp"
#include "overuse/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace overuse {

using json = nlohmann::ordered_json;

double avg_at_k(const std::vector<bool>& outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("avg_at_k: empty outcome list");
    std::size_t hits = 0;
    for (bool b : outcomes) hits += b ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double entropy_from_counts(const std::vector<std::size_t>& counts) {
    std::size_t total = 0, nonzero = 0;
    for (std::size_t c : counts) {
        total += c;
        nonzero += c > 0 ? 1 : 0;
    }
    if (total == 0) throw std::invalid_argument("answer_entropy: empty answer list");
    if (nonzero <= 1) return 0.0;  // degenerate distribution, exactly zero
    double h = 0.0;
    const double n = static_cast<double>(total);
    for (std::size_t c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h < 0.0 ? 0.0 : h;
}

double answer_entropy(const std::vector<std::string>& answers) {
    std::unordered_map<std::string, std::size_t> hist;
    for (const std::string& a : answers) ++hist[normalized_key(a)];
    std::vector<std::size_t> counts;
    counts.reserve(hist.size());
    for (const auto& [key, c] : hist) counts.push_back(c);
    return entropy_from_counts(counts);
}

Partition partition_simple_complex(const KnowledgeProfile& profile) {
    if (profile.k_no_tool != 8)
        throw std::invalid_argument("partition_simple_complex: requires avg@8 (k = 8), got k = " +
                                    std::to_string(profile.k_no_tool));
    return profile.avg_at_k >= 0.5 ? Partition::Simple : Partition::Complex;
}

int assign_bin(double v) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("assign_bin: value outside [0, 1]: " + format_number(v));
    if (v == 0.0) return 0;
    int bin = static_cast<int>(std::ceil(v * 10.0));
    return std::clamp(bin, 1, 10);
}

std::optional<double> tool_at_k(const std::vector<Trajectory>& trajectories, ToolAtKAgg agg) {
    std::optional<std::size_t> best;
    const std::string* qid = nullptr;
    for (const Trajectory& t : trajectories) {
        if (qid && t.query_id != *qid)
            throw std::invalid_argument("tool_at_k: mixed query ids '" + *qid + "' and '" +
                                        t.query_id + "'");
        qid = &t.query_id;
        if (t.mode != RolloutMode::with_tool)
            throw std::invalid_argument("tool_at_k: no_tool trajectory in with-tool set for '" +
                                        t.query_id + "'");
        if (!t.counts_correct()) continue;
        if (!best) best = t.tool_call_count;
        else if (agg == ToolAtKAgg::max) best = std::max(*best, t.tool_call_count);
        else best = std::min(*best, t.tool_call_count);
    }
    if (!best) return std::nullopt;
    return static_cast<double>(*best);
}

std::optional<double> corpus_tool_at_k(const std::vector<KnowledgeProfile>& profiles) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : profiles) {
        if (!p.tool_at_k) continue;
        sum += *p.tool_at_k;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

// --- accumulation ----------------------------------------------------------------

void QueryAccum::add_no_tool(const Trajectory& t) {
    ++no_tool_n;
    if (t.counts_correct()) ++no_tool_correct;
    ++answer_counts[normalized_key(t.final_answer)];
}

void QueryAccum::add_with_tool(const Trajectory& t, ToolAtKAgg agg) {
    ++with_tool_n;
    call_sum += t.tool_call_count;
    if (!t.counts_correct()) return;
    ++with_tool_correct;
    if (!agg_calls_correct) agg_calls_correct = t.tool_call_count;
    else if (agg == ToolAtKAgg::max) agg_calls_correct = std::max(*agg_calls_correct, t.tool_call_count);
    else agg_calls_correct = std::min(*agg_calls_correct, t.tool_call_count);
}

void QueryAccum::merge(const QueryAccum& other, ToolAtKAgg agg) {
    no_tool_n += other.no_tool_n;
    no_tool_correct += other.no_tool_correct;
    for (const auto& [key, c] : other.answer_counts) answer_counts[key] += c;
    with_tool_n += other.with_tool_n;
    with_tool_correct += other.with_tool_correct;
    call_sum += other.call_sum;
    if (other.agg_calls_correct) {
        if (!agg_calls_correct) agg_calls_correct = other.agg_calls_correct;
        else if (agg == ToolAtKAgg::max)
            agg_calls_correct = std::max(*agg_calls_correct, *other.agg_calls_correct);
        else
            agg_calls_correct = std::min(*agg_calls_correct, *other.agg_calls_correct);
    }
}

namespace {

ProfileBuildResult finalize_accums(const QueryCorpus& corpus,
                                   const std::unordered_map<std::string, QueryAccum>& accums) {
    ProfileBuildResult result;
    for (const QueryRecord& q : corpus.records()) {
        auto it = accums.find(q.query_id);
        if (it == accums.end()) continue;  // query never sampled, nothing to profile
        const QueryAccum& a = it->second;
        if (a.no_tool_n == 0) {
            result.skipped_query_ids.push_back(q.query_id);
            continue;
        }
        KnowledgeProfile p;
        p.query_id = q.query_id;
        p.k_no_tool = a.no_tool_n;
        p.avg_at_k = static_cast<double>(a.no_tool_correct) / static_cast<double>(a.no_tool_n);
        std::vector<std::size_t> counts;
        counts.reserve(a.answer_counts.size());
        for (const auto& [key, c] : a.answer_counts) counts.push_back(c);
        p.entropy_bits = entropy_from_counts(counts);
        p.bin_index = assign_bin(p.avg_at_k);
        if (a.with_tool_n > 0) {
            p.avg_at_k_with_tool =
                static_cast<double>(a.with_tool_correct) / static_cast<double>(a.with_tool_n);
            p.mean_tool_calls =
                static_cast<double>(a.call_sum) / static_cast<double>(a.with_tool_n);
            if (a.agg_calls_correct) p.tool_at_k = static_cast<double>(*a.agg_calls_correct);
        }
        result.profiles.push_back(std::move(p));
    }
    return result;
}

}  // namespace

ProfileBuildResult build_profiles(const std::vector<Trajectory>& no_tool_trajs,
                                  const std::vector<Trajectory>& with_tool_trajs,
                                  const QueryCorpus& corpus, ToolAtKAgg agg) {
    std::unordered_map<std::string, QueryAccum> accums;
    for (const Trajectory& t : no_tool_trajs) {
        if (t.mode != RolloutMode::no_tool)
            throw std::invalid_argument("build_profiles: with_tool trajectory in no-tool set for '" +
                                        t.query_id + "'");
        if (!corpus.contains(t.query_id))
            throw std::invalid_argument("build_profiles: unknown query_id '" + t.query_id + "'");
        accums[t.query_id].add_no_tool(t);
    }
    for (const Trajectory& t : with_tool_trajs) {
        if (t.mode != RolloutMode::with_tool)
            throw std::invalid_argument("build_profiles: no_tool trajectory in with-tool set for '" +
                                        t.query_id + "'");
        if (!corpus.contains(t.query_id))
            throw std::invalid_argument("build_profiles: unknown query_id '" + t.query_id + "'");
        accums[t.query_id].add_with_tool(t, agg);
    }
    return finalize_accums(corpus, accums);
}

std::vector<BinSummary> bin_summaries(const std::vector<KnowledgeProfile>& profiles) {
    struct Sums {
        std::size_t count = 0;
        double entropy = 0.0;
        double avg_with_tool = 0.0;
        std::size_t avg_n = 0;
        double calls = 0.0;
        std::size_t calls_n = 0;
    };
    std::vector<Sums> sums(kBinCount);
    for (const auto& p : profiles) {
        if (p.bin_index < 0 || p.bin_index >= kBinCount)
            throw std::invalid_argument("bin_summaries: bin_index out of range for '" +
                                        p.query_id + "'");
        Sums& s = sums[static_cast<std::size_t>(p.bin_index)];
        ++s.count;
        s.entropy += p.entropy_bits;
        if (p.avg_at_k_with_tool) {
            s.avg_with_tool += *p.avg_at_k_with_tool;
            ++s.avg_n;
        }
        if (p.mean_tool_calls) {
            s.calls += *p.mean_tool_calls;
            ++s.calls_n;
        }
    }
    std::vector<BinSummary> out(kBinCount);
    for (int b = 0; b < kBinCount; ++b) {
        const Sums& s = sums[static_cast<std::size_t>(b)];
        BinSummary& bs = out[static_cast<std::size_t>(b)];
        bs.bin_index = b;
        bs.query_count = s.count;
        if (s.count > 0) bs.mean_entropy_bits = s.entropy / static_cast<double>(s.count);
        if (s.avg_n > 0) bs.mean_avg_at_k_with_tool = s.avg_with_tool / static_cast<double>(s.avg_n);
        if (s.calls_n > 0) bs.mean_tool_calls = s.calls / static_cast<double>(s.calls_n);
    }
    return out;
}

// --- streaming profiling -----------------------------------------------------------

StreamingProfiler::StreamingProfiler(const QueryCorpus& corpus, ToolAtKAgg agg)
    : corpus_(corpus), agg_(agg) {}

void StreamingProfiler::consume_file(const std::string& path, RolloutMode expected_mode,
                                     std::size_t workers) {
    workers = worker_count(workers);
    std::vector<std::unordered_map<std::string, QueryAccum>> shards(workers);

    parallel_for_each_line(
        path, workers, [&](std::size_t worker, std::size_t line_no, std::string_view line) {
            Trajectory t = parse_trajectory_line(line, &corpus_, false, path, line_no);
            if (t.mode != expected_mode)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected mode " + std::string(to_string(expected_mode)) +
                                         ", got " + to_string(t.mode));
            auto& local = shards[worker];
            if (expected_mode == RolloutMode::no_tool) local[t.query_id].add_no_tool(t);
            else local[t.query_id].add_with_tool(t, agg_);
        });

    for (auto& shard : shards)
        for (auto& [qid, accum] : shard) accums_[qid].merge(accum, agg_);
}

void StreamingProfiler::consume_no_tool_file(const std::string& path, std::size_t workers) {
    consume_file(path, RolloutMode::no_tool, workers);
}

void StreamingProfiler::consume_with_tool_file(const std::string& path, std::size_t workers) {
    consume_file(path, RolloutMode::with_tool, workers);
}

ProfileBuildResult StreamingProfiler::finalize() const {
    return finalize_accums(corpus_, accums_);
}

// --- persistence --------------------------------------------------------------------

void write_profiles_jsonl(const std::string& path, const std::vector<KnowledgeProfile>& profiles) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& p : profiles) {
        json j;
        j["query_id"] = p.query_id;
        j["k_no_tool"] = p.k_no_tool;
        j["avg_at_k"] = p.avg_at_k;
        j["entropy_bits"] = p.entropy_bits;
        j["bin_index"] = p.bin_index;
        if (p.avg_at_k_with_tool) j["avg_at_k_with_tool"] = *p.avg_at_k_with_tool;
        if (p.mean_tool_calls) j["mean_tool_calls"] = *p.mean_tool_calls;
        if (p.tool_at_k) j["tool_at_k"] = *p.tool_at_k;
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<KnowledgeProfile> read_profiles_jsonl(const std::string& path) {
    std::vector<KnowledgeProfile> out;
    for_each_line(path, [&](std::size_t line_no, std::string_view line) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed JSON object");
        KnowledgeProfile p;
        try {
            p.query_id = j.at("query_id").get<std::string>();
            p.k_no_tool = j.at("k_no_tool").get<std::size_t>();
            p.avg_at_k = j.at("avg_at_k").get<double>();
            p.entropy_bits = j.at("entropy_bits").get<double>();
            p.bin_index = j.at("bin_index").get<int>();
            if (j.contains("avg_at_k_with_tool"))
                p.avg_at_k_with_tool = j["avg_at_k_with_tool"].get<double>();
            if (j.contains("mean_tool_calls"))
                p.mean_tool_calls = j["mean_tool_calls"].get<double>();
            if (j.contains("tool_at_k")) p.tool_at_k = j["tool_at_k"].get<double>();
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(p));
    });
    return out;
}

void write_bins_csv(const std::string& path, const std::vector<BinSummary>& bins) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "bin_index,count,mean_entropy_bits,mean_avg_with_tool,mean_tool_calls\n";
    for (const auto& b : bins) {
        out << b.bin_index << ',' << b.query_count << ',';
        if (b.mean_entropy_bits) out << format_number(*b.mean_entropy_bits);
        out << ',';
        if (b.mean_avg_at_k_with_tool) out << format_number(*b.mean_avg_at_k_with_tool);
        out << ',';
        if (b.mean_tool_calls) out << format_number(*b.mean_tool_calls);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<BinSummary> read_bins_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "bin_index,count,mean_entropy_bits,mean_avg_with_tool,mean_tool_calls")
        throw std::runtime_error(path + ": missing or unexpected bins.csv header");
    std::vector<BinSummary> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        while (fields.size() < 5) fields.emplace_back();
        BinSummary b;
        b.bin_index = std::stoi(fields[0]);
        b.query_count = static_cast<std::size_t>(std::stoull(fields[1]));
        auto opt = [](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            double v = 0.0;
            if (!parse_finite_number(s, v)) throw std::runtime_error("bad CSV number: " + s);
            return v;
        };
        b.mean_entropy_bits = opt(fields[2]);
        b.mean_avg_at_k_with_tool = opt(fields[3]);
        b.mean_tool_calls = opt(fields[4]);
        out.push_back(b);
    }
    return out;
}

}  // namespace overuse
