#pragma once

#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace billiards {

enum class Execution { serial, parallel };

struct RunOptions {
    std::uint64_t seed = 1;
    int streams = 32;  // fixed statistical batches, independent of the worker count
    int workers = 1;
    Execution execution = Execution::parallel;
};

/// Evaluates fn(stream) for every stream and returns the results in stream order.
/// Each stream owns its RNG, so results do not depend on scheduling or worker count.
template <class Result, class Fn>
std::vector<Result> run_streams(const RunOptions& opt, Fn&& fn)
{
    std::vector<Result> out(static_cast<size_t>(opt.streams));
    if (opt.execution == Execution::serial || opt.workers <= 1) {
        for (int s = 0; s < opt.streams; ++s) out[static_cast<size_t>(s)] = fn(s);
        return out;
    }
#ifdef _OPENMP
    std::vector<std::exception_ptr> errors(static_cast<size_t>(opt.streams));
#pragma omp parallel for schedule(dynamic, 1) num_threads(opt.workers)
    for (int s = 0; s < opt.streams; ++s) {
        try {
            out[static_cast<size_t>(s)] = fn(s);
        } catch (...) {
            errors[static_cast<size_t>(s)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
#else
    for (int s = 0; s < opt.streams; ++s) out[static_cast<size_t>(s)] = fn(s);
#endif
    return out;
}

/// Splits `total` units of work over `streams` as evenly as possible.
inline std::int64_t stream_share(std::int64_t total, int streams, int stream)
{
    const std::int64_t base = total / streams;
    return base + (stream < total % streams ? 1 : 0);
}

}  // namespace billiards
