#pragma once

// Constraints-as-terminations.
//
// Each constraint i yields a violation c_i = max(0, signal_i - limit_i).
// The termination probability for a step is
//
//     delta = max_i  p_i * clip(c_i / cmax_i, 0, 1)
//
// where p_i is the constraint's curriculum probability and cmax_i a running
// estimate of the batch-maximum violation.  delta is used directly as a
// continuous done / reward-attenuation signal: the learner sees reward
// (1 - delta) * r and treats (1 - delta) as the continuation factor.  Hard
// constraints additionally force an environment reset whenever violated.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace catrl {

enum class ConstraintKind { kSoft, kHard };

// violations are plain non-negative reals, one per registered constraint
using ViolationVector = std::vector<double>;

struct ConstraintSpec {
  std::string name;
  ConstraintKind kind = ConstraintKind::kSoft;
  double limit = 0.0;   // threshold applied to the raw signal
  double p_min = 0.05;  // curriculum start probability
  double p_max = 1.0;   // curriculum end probability
  // fraction of total training progress at which p_max is reached
  double curriculum_end_fraction = 0.6;
};

inline void validate(const ConstraintSpec& s) {
  const std::string where = "constraint '" + s.name + "': ";
  if (s.name.empty()) throw std::invalid_argument("constraint: empty name");
  if (!(s.p_min >= 0.0 && s.p_min <= s.p_max && s.p_max <= 1.0))
    throw std::invalid_argument(where + "need 0 <= p_min <= p_max <= 1");
  if (s.kind == ConstraintKind::kHard && (s.p_min != 1.0 || s.p_max != 1.0))
    throw std::invalid_argument(where + "hard constraints require p_min = p_max = 1");
  if (!(s.curriculum_end_fraction > 0.0 && s.curriculum_end_fraction <= 1.0))
    throw std::invalid_argument(where + "curriculum_end_fraction must be in (0, 1]");
}

// Running estimate of the maximum violation scale, floored away from zero so
// the clip ratio stays well-defined.
struct ConstraintState {
  double cmax = 1e-3;
  double ema_coefficient = 0.05;
  double floor = 1e-3;
  bool initialized = false;
};

struct TerminationOutcome {
  double delta = 0.0;  // in [0, 1]
  // index of the constraint attaining the max (first on ties); empty when
  // every violation is zero
  std::optional<std::size_t> triggering_index;
  // any hard constraint violated -> environment must reset, whatever delta is
  bool hard_triggered = false;
};

inline double violation(double signal, double limit) {
  return std::max(0.0, signal - limit);
}

// Piecewise-linear ramp from p_min to p_max, flat after end_fraction of
// training.  Hard constraints are always at probability 1.
inline double curriculum_probability(const ConstraintSpec& spec, double progress) {
  if (!(progress >= 0.0 && progress <= 1.0))
    throw std::invalid_argument("curriculum_probability: progress outside [0, 1]");
  if (spec.kind == ConstraintKind::kHard) return 1.0;
  const double t = progress / spec.curriculum_end_fraction;
  if (t >= 1.0) return spec.p_max;  // saturated: exactly p_max from here on
  return spec.p_min + (spec.p_max - spec.p_min) * t;
}

// EMA toward the batch maximum; both the seed value and every update are
// floored so cmax never collapses to zero on quiet batches.
inline ConstraintState update_cmax(ConstraintState state,
                                   std::span<const double> batch_violations) {
  if (batch_violations.empty())
    throw std::invalid_argument("update_cmax: empty batch");
  double batch_max = 0.0;
  for (double v : batch_violations) batch_max = std::max(batch_max, v);
  batch_max = std::max(batch_max, state.floor);
  if (!state.initialized) {
    state.cmax = batch_max;
    state.initialized = true;
  } else {
    state.cmax = (1.0 - state.ema_coefficient) * state.cmax +
                 state.ema_coefficient * batch_max;
  }
  return state;
}

inline TerminationOutcome compute_delta(std::span<const double> violations,
                                        std::span<const ConstraintState> states,
                                        std::span<const double> probabilities,
                                        std::span<const ConstraintKind> kinds) {
  const std::size_t n = violations.size();
  if (states.size() != n || probabilities.size() != n || kinds.size() != n)
    throw std::invalid_argument("compute_delta: mismatched spans");
  TerminationOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    if (violations[i] < 0.0)
      throw std::invalid_argument("compute_delta: negative violation");
    if (!(states[i].cmax > 0.0))
      throw std::invalid_argument("compute_delta: cmax must be positive");
    if (violations[i] <= 0.0) continue;
    if (kinds[i] == ConstraintKind::kHard) out.hard_triggered = true;
    const double term =
        probabilities[i] * std::clamp(violations[i] / states[i].cmax, 0.0, 1.0);
    // strict '>' keeps the first registered constraint on ties
    if (!out.triggering_index || term > out.delta) {
      out.delta = term;
      out.triggering_index = i;
    }
  }
  return out;
}

// Reward attenuation: the step's reward is kept with weight (1 - delta) and
// delta doubles as the done probability handed to the learner.
inline std::pair<double, double> apply_termination(double reward,
                                                   const TerminationOutcome& o) {
  return {(1.0 - o.delta) * reward, o.delta};
}

// Percentage of steps with a positive violation, one entry per constraint.
// `episode` is steps x constraints.
inline std::vector<double> violation_time_percent(
    const std::vector<ViolationVector>& episode) {
  if (episode.empty()) return {};
  const std::size_t n = episode.front().size();
  std::vector<double> pct(n, 0.0);
  for (const auto& step : episode) {
    if (step.size() != n)
      throw std::invalid_argument("violation_time_percent: ragged episode");
    for (std::size_t i = 0; i < n; ++i)
      if (step[i] > 0.0) pct[i] += 1.0;
  }
  for (auto& p : pct) p *= 100.0 / static_cast<double>(episode.size());
  return pct;
}

// Average of per-episode percentages (episodes may have different lengths).
inline std::vector<double> mean_violation_time_percent(
    const std::vector<std::vector<ViolationVector>>& episodes) {
  std::vector<double> mean;
  std::size_t counted = 0;
  for (const auto& ep : episodes) {
    if (ep.empty()) continue;
    const auto pct = violation_time_percent(ep);
    if (mean.empty()) mean.assign(pct.size(), 0.0);
    if (pct.size() != mean.size())
      throw std::invalid_argument("mean_violation_time_percent: ragged episodes");
    for (std::size_t i = 0; i < pct.size(); ++i) mean[i] += pct[i];
    ++counted;
  }
  for (auto& m : mean) m /= static_cast<double>(std::max<std::size_t>(counted, 1));
  return mean;
}

// Registry holding the constraint table in a fixed order together with the
// per-constraint cmax states and current curriculum probabilities.
class ConstraintEngine {
 public:
  std::size_t add(ConstraintSpec spec) {
    validate(spec);
    for (const auto& s : specs_)
      if (s.name == spec.name)
        throw std::invalid_argument("constraint '" + spec.name + "' registered twice");
    specs_.push_back(std::move(spec));
    states_.push_back(ConstraintState{});
    kinds_.push_back(specs_.back().kind);
    probabilities_.push_back(curriculum_probability(specs_.back(), 0.0));
    return specs_.size() - 1;
  }

  std::size_t size() const { return specs_.size(); }
  const std::vector<ConstraintSpec>& specs() const { return specs_; }
  const std::vector<ConstraintState>& states() const { return states_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  void set_progress(double progress) {
    for (std::size_t i = 0; i < specs_.size(); ++i)
      probabilities_[i] = curriculum_probability(specs_[i], progress);
  }

  // raw environment signals -> non-negative violations, in registry order
  ViolationVector violations_from_signals(std::span<const double> signals) const {
    if (signals.size() != specs_.size())
      throw std::invalid_argument("violations_from_signals: wrong signal count");
    ViolationVector v(specs_.size());
    for (std::size_t i = 0; i < specs_.size(); ++i)
      v[i] = violation(signals[i], specs_[i].limit);
    return v;
  }

  TerminationOutcome evaluate(std::span<const double> violations) const {
    return compute_delta(violations, states_, probabilities_, kinds_);
  }

  void update_cmax(std::size_t index, std::span<const double> batch_violations) {
    states_.at(index) = catrl::update_cmax(states_.at(index), batch_violations);
  }

 private:
  std::vector<ConstraintSpec> specs_;
  std::vector<ConstraintState> states_;
  std::vector<ConstraintKind> kinds_;
  std::vector<double> probabilities_;
};

}  // namespace catrl
