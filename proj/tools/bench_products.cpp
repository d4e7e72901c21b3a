// Benchmark: serial reference vs OpenMP drivers on the two hot workloads
// (replica Monte Carlo and kernel-density grids). Results must agree bit for
// bit; the table reports wall times and speedup.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "prodmat/harness.hpp"
#include "prodmat/limit.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace prodmat;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Row {
    const char* name;
    double serial_ms;
    double parallel_ms;
    bool identical;
};

Row bench_universality() {
    ExperimentConfig cfg;
    cfg.ensemble.kind = EnsembleSpec::Kind::FixedSpectrum;
    cfg.ensemble.atoms = {0.5, 2.0};
    cfg.n = 40;
    cfg.m = 40;
    cfg.c_grid = {0.5};
    cfg.replicas = 128;
    cfg.seed = 17;

    double t0 = now_ms();
    ExperimentReport serial = run_universality(cfg, /*parallel=*/false);
    double t1 = now_ms();
    ExperimentReport parallel = run_universality(cfg, /*parallel=*/true);
    double t2 = now_ms();

    bool same = serial.queries.size() == parallel.queries.size();
    for (std::size_t i = 0; same && i < serial.queries.size(); ++i)
        same = std::memcmp(&serial.queries[i].estimate, &parallel.queries[i].estimate,
                           sizeof(double)) == 0;
    for (std::size_t i = 0; same && i < serial.top_samples_a.size(); ++i)
        same = serial.top_samples_a[i] == parallel.top_samples_a[i];
    return {"universality replicas (N=40, M=40, R=128)", t1 - t0, t2 - t1, same};
}

Row bench_kernel_grid() {
    double t0 = now_ms();
    double serial = expected_count(1.0, -2.0, /*parallel=*/false);
    double t1 = now_ms();
    double parallel = expected_count(1.0, -2.0, /*parallel=*/true);
    double t2 = now_ms();
    return {"kernel intensity integral (t=1, a=-2)", t1 - t0, t2 - t1, serial == parallel};
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    Row rows[] = {bench_universality(), bench_kernel_grid()};
    std::printf("%-45s %10s %10s %8s %6s\n", "workload", "serial ms", "openmp ms", "speedup",
                "match");
    bool all_match = true;
    for (const Row& r : rows) {
        std::printf("%-45s %10.1f %10.1f %7.2fx %6s\n", r.name, r.serial_ms, r.parallel_ms,
                    r.serial_ms / r.parallel_ms, r.identical ? "yes" : "NO");
        all_match = all_match && r.identical;
    }
    return all_match ? 0 : 1;
}
