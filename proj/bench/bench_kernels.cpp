// Serial reference vs OpenMP stream kernels. Outputs must agree bit for bit; only time differs.
//
//   bench_kernels [workers]    (default: omp_get_max_threads(), at least 2)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include <omp.h>

#include "billiards/stats.hpp"

using namespace billiards;

namespace {

template <class F>
double seconds(F&& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Kernel>
bool compare(const char* name, int workers, Kernel&& kernel)
{
    RunOptions serial, parallel;
    serial.execution = Execution::serial;
    parallel.workers = workers;
    decltype(kernel(serial)) a, b;
    const double ts = seconds([&] { a = kernel(serial); });
    const double tp = seconds([&] { b = kernel(parallel); });
    const bool same = a == b;
    std::printf("%-28s serial %8.3f s   parallel(%d) %8.3f s   speedup %5.2f   %s\n", name, ts, workers, tp, ts / tp,
                same ? "identical" : "DIFFERENT");
    return same;
}

}  // namespace

int main(int argc, char** argv)
{
    const int workers = argc > 1 ? std::atoi(argv[1]) : std::max(2, omp_get_max_threads());
    std::printf("hardware threads available to OpenMP: %d\n", omp_get_max_threads());

    const auto stadium = std::make_shared<const BilliardTable>(make_stadium(2.0, 1.0));
    const auto cusp = std::make_shared<const BilliardTable>(make_three_cusp(1.0));
    bool ok = true;

    ok &= compare("map correlation (stadium)", workers, [&](const RunOptions& run) {
        MapCorrelationOptions opt;
        opt.collisions = 4'000'000;
        opt.run = run;
        const Observable v = cos_phi_observable();
        return map_correlation(CrossSection::full(stadium), v, v, opt).rho;
    });
    ok &= compare("flow correlation (stadium)", workers, [&](const RunOptions& run) {
        FlowCorrelationOptions opt;
        opt.total_time = 1e5;
        opt.t_max = 100;
        opt.run = run;
        const Observable v = Observable::bump(*stadium, stadium->centroid(), 0.4);
        return flow_correlation(*stadium, v, v, opt).rho;
    });
    ok &= compare("return tails (cusp section)", workers, [&](const RunOptions& run) {
        TailOptions opt;
        opt.returns = 2'000'000;
        opt.run = run;
        return tail_distribution(CrossSection::cusp(cusp), opt).by_stream;
    });
    ok &= compare("variance growth (three-cusp)", workers, [&](const RunOptions& run) {
        VarianceOptions opt;
        opt.ensemble = 4000;
        opt.horizons = {100, 200, 400};
        opt.run = run;
        return variance_growth(*cusp, Observable::bump(*cusp, cusp->centroid(), 0.07), opt).variance;
    });
    return ok ? 0 : 1;
}
