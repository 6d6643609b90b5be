#include "overuse/jsonl.hpp"
#include "overuse/util.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

namespace overuse {

namespace {

constexpr std::size_t kChunkSize = 4u << 20;

struct LineBatch {
    std::string data;                    // raw bytes, newline-separated
    std::vector<std::size_t> offsets;    // start offset of each line
    std::vector<std::size_t> lengths;
    std::size_t first_line_no = 0;       // line number of offsets[0]
};

// Streams a file chunk-wise and emits batches of complete lines.
template <typename Sink>
void scan_lines(const std::string& path, Sink&& sink) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string carry;
    std::vector<char> chunk(kChunkSize);
    std::size_t line_no = 0;

    auto flush_batch = [&](std::string_view block, std::size_t base_line) {
        LineBatch batch;
        batch.data.assign(block);
        batch.first_line_no = base_line;
        std::size_t pos = 0;
        while (pos < batch.data.size()) {
            std::size_t nl = batch.data.find('\n', pos);
            if (nl == std::string::npos) nl = batch.data.size();
            batch.offsets.push_back(pos);
            batch.lengths.push_back(nl - pos);
            pos = nl + 1;
        }
        if (!batch.offsets.empty()) sink(std::move(batch));
    };

    while (in) {
        in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
        std::size_t got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        std::string_view view(chunk.data(), got);
        std::size_t last_nl = view.rfind('\n');
        if (last_nl == std::string_view::npos) {
            carry.append(view);
            continue;
        }
        std::string block = std::move(carry);
        carry.clear();
        block.append(view.substr(0, last_nl + 1));
        std::size_t base = line_no + 1;
        line_no += static_cast<std::size_t>(std::count(block.begin(), block.end(), '\n'));
        flush_batch(block, base);
        carry.assign(view.substr(last_nl + 1));
    }
    if (!carry.empty()) flush_batch(carry, line_no + 1);
}

template <typename Fn>
void emit_batch(const LineBatch& batch, Fn&& fn) {
    for (std::size_t i = 0; i < batch.offsets.size(); ++i) {
        std::string_view line(batch.data.data() + batch.offsets[i], batch.lengths[i]);
        // Lines are physical; a trailing \r from CRLF input is dropped here.
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) continue;
        fn(batch.first_line_no + i, line);
    }
}

}  // namespace

std::size_t worker_count(std::size_t requested) {
    std::size_t n = requested;
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : hw;
    }
    if (const char* env = std::getenv("OVERUSE_LAB_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(n, 1);
}

void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, std::string_view)>& fn) {
    scan_lines(path, [&](LineBatch&& batch) { emit_batch(batch, fn); });
}

void parallel_for_each_line(
    const std::string& path, std::size_t workers,
    const std::function<void(std::size_t, std::size_t, std::string_view)>& fn) {
    workers = std::max<std::size_t>(workers, 1);
    if (workers == 1) {
        for_each_line(path,
                      [&](std::size_t line_no, std::string_view line) { fn(0, line_no, line); });
        return;
    }

    std::mutex mu;
    std::condition_variable cv_push, cv_pop;
    std::deque<LineBatch> queue;
    bool done = false;
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    const std::size_t max_queued = workers * 2;

    auto worker = [&](std::size_t worker_idx) {
        for (;;) {
            LineBatch batch;
            {
                std::unique_lock lock(mu);
                cv_pop.wait(lock, [&] { return done || !queue.empty(); });
                if (queue.empty()) return;
                batch = std::move(queue.front());
                queue.pop_front();
            }
            cv_push.notify_one();
            if (failed.load(std::memory_order_relaxed)) continue;
            try {
                emit_batch(batch, [&](std::size_t line_no, std::string_view line) {
                    fn(worker_idx, line_no, line);
                });
            } catch (...) {
                std::scoped_lock lock(mu);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker, i);

    try {
        scan_lines(path, [&](LineBatch&& batch) {
            std::unique_lock lock(mu);
            cv_push.wait(lock, [&] { return queue.size() < max_queued; });
            queue.push_back(std::move(batch));
            lock.unlock();
            cv_pop.notify_one();
        });
    } catch (...) {
        std::scoped_lock lock(mu);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
    }

    {
        std::scoped_lock lock(mu);
        done = true;
    }
    cv_pop.notify_all();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace overuse
