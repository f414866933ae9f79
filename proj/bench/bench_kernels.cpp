// Times full DISA iterations with the agent-parallel kernels against the
// serial reference kernels on the same instance.
//
//   bench_kernels [agents] [dim] [iterations]

#include "disa/disa.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace disa;

namespace {

double time_run(const ProblemInstance& inst, const MixingMatrix& w, const StepSizes& s, Execution exec,
                int iterations) {
  DisaEngine engine(inst, w, s, exec);
  engine.iterate();
  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < iterations; ++k) engine.iterate();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t agents = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 16;
  const std::size_t dim = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 200;
  const int iterations = argc > 3 ? std::atoi(argv[3]) : 200;

  const ProblemInstance inst = make_generalized_lasso(agents, dim, 7);
  const MixingMatrix w = metropolis_weights(build_graph(TopologySpec::parse("cycle"), agents));
  const StepSizes s = default_step_sizes(inst.lipschitz_constants(), StepPolicy::lasso_default);

  std::printf("agents=%zu dim=%zu iterations=%d threads=%d\n", agents, dim, iterations, omp_get_max_threads());
  const double serial = time_run(inst, w, s, Execution::serial_reference, iterations);
  const double parallel = time_run(inst, w, s, Execution::parallel, iterations);
  std::printf("%-10s %10.2f ms  %8.3f ms/iter\n", "reference", serial, serial / iterations);
  std::printf("%-10s %10.2f ms  %8.3f ms/iter\n", "openmp", parallel, parallel / iterations);
  std::printf("speedup    %10.2fx\n", serial / parallel);
  return 0;
}
