#pragma once

#include "disa/disa.hpp"

#include <cstdint>

namespace disa {

// Inexactness tolerance ε^k. Power schedules require r > 1 (summable);
// `unsafe` admits r ≤ 1 for failure demonstrations.
class EpsilonSchedule {
 public:
  enum class Kind { zero, power, geometric };

  static EpsilonSchedule zero();
  static EpsilonSchedule power(double eps0, double r, bool unsafe = false);
  static EpsilonSchedule geometric(double r);
  // "zero", "power(e0,r)", "geometric(r)"; unsafe power is never parsed.
  static EpsilonSchedule parse(const std::string& text);

  double at(std::size_t k) const;
  bool summable() const;
  Kind kind() const { return kind_; }
  std::string to_string() const;

 private:
  Kind kind_ = Kind::zero;
  double eps0_ = 0.0;
  double rate_ = 0.0;
};

// How the single prox of each V-DISA iteration is approximated.
struct InexactProxStrategy {
  enum class Kind { exact, injected, adversarial, iterative };
  Kind kind = Kind::exact;
  std::uint64_t seed = 0;  // injected: direction stream

  static InexactProxStrategy parse(const std::string& text);
  std::string to_string() const;
};

// Approximates prox_{τg}(u) and certifies d ∈ ∂g(x̃) + (x̃ − u)/τ with ‖d‖ ≤ ε.
// `direction` supplies the perturbation for the injected and adversarial
// strategies (scaled to norm ε); it is ignored otherwise.
ProxCertificate approximate_prox(const ProxOperator& g, const Vector& u, double tau, double eps,
                                 InexactProxStrategy::Kind kind, const Vector& direction = Vector());

class VdisaEngine : public EngineBase {
 public:
  VdisaEngine(const ProblemInstance& inst, const MixingMatrix& w, StepSizes steps, EpsilonSchedule schedule,
              InexactProxStrategy strategy, Execution exec = Execution::parallel);

  // One iteration using ε^k with k the number of completed iterations.
  void iterate();
  double last_epsilon() const { return last_eps_; }
  const EpsilonSchedule& schedule() const { return schedule_; }

 private:
  Vector perturbation_direction(std::size_t agent, std::size_t k) const;

  EpsilonSchedule schedule_;
  InexactProxStrategy strategy_;
  double last_eps_ = 0.0;
};

void vdisa_iterate(VdisaEngine& engine);

// As disa_run; rows additionally carry ε^k and max_i ‖d_i‖.
Trace vdisa_run(VdisaEngine& engine, const RunOptions& opts);

}  // namespace disa
