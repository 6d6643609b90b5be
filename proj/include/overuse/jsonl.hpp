#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace overuse {

// Calls fn(line_number, line) for every non-empty line of a JSONL file.
// Line numbers are 1-based. Reads in fixed-size chunks; never loads the
// whole file.
void for_each_line(const std::string& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

// Same contract, but lines are dispatched to `workers` threads. fn receives
// (worker_index, line_number, line) with worker_index < workers, and must be
// safe to call concurrently for distinct worker indices; invocation order is
// unspecified. The first exception thrown by fn is rethrown on the caller.
void parallel_for_each_line(
    const std::string& path, std::size_t workers,
    const std::function<void(std::size_t, std::size_t, std::string_view)>& fn);

}  // namespace overuse
