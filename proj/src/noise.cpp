#include "twz/noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "twz/rng.hpp"

namespace twz::noise {

namespace {

constexpr std::uint64_t kCoherenceChannel = 0xC0DE5Eull;
constexpr std::uint64_t kFidelityChannel = 0xF1DE50ull;
constexpr int kOneOverFComponents = 20;
constexpr double kOneOverFDecades = 30.0; // component times span [tc/30, 30 tc]

struct Segment {
  double duration = 0.0;
  int sign = 1;
};

std::vector<Segment> schedule_segments(const DDSchedule& schedule) {
  std::vector<Segment> segs;
  segs.reserve(static_cast<std::size_t>(2 * schedule.n_stages));
  for (int s = 0; s < schedule.n_stages; ++s) {
    segs.push_back({schedule.stage_drive, +1});
    segs.push_back({schedule.stage_idle, -1});
  }
  return segs;
}

// Correlation times of the OU bank realizing the broadband kind.
std::vector<double> component_times(const NoiseModel& noise) {
  if (noise.kind == NoiseKind::ornstein_uhlenbeck)
    return {noise.correlation_time};
  std::vector<double> times(kOneOverFComponents);
  for (int i = 0; i < kOneOverFComponents; ++i) {
    const double u = kOneOverFComponents == 1
                         ? 0.0
                         : 2.0 * i / (kOneOverFComponents - 1.0) - 1.0;
    times[static_cast<std::size_t>(i)] =
        noise.correlation_time * std::pow(kOneOverFDecades, u);
  }
  return times;
}

// Time grid holding every segment boundary of every schedule plus a uniform
// refinement, so one trajectory realization serves all schedules in a sweep.
std::vector<double> union_grid(const std::vector<std::vector<Segment>>& sets,
                               double resolution) {
  double total = 0.0;
  for (const auto& seg : sets.front()) total += seg.duration;
  std::vector<double> times;
  const int base = std::max(
      64, static_cast<int>(std::ceil(total / std::max(resolution, 1e-12))));
  for (int i = 0; i <= base; ++i)
    times.push_back(total * static_cast<double>(i) / base);
  for (const auto& set : sets) {
    double t = 0.0;
    for (const auto& seg : set) {
      t += seg.duration;
      times.push_back(std::min(t, total));
    }
  }
  std::sort(times.begin(), times.end());
  std::vector<double> grid;
  grid.reserve(times.size());
  for (double t : times)
    if (grid.empty() || t - grid.back() > 1e-15 * total) grid.push_back(t);
  return grid;
}

// Per-interval phase signs for one schedule on the shared grid.
std::vector<int> interval_signs(const std::vector<Segment>& segs,
                                const std::vector<double>& grid) {
  std::vector<int> signs(grid.size() - 1, segs.back().sign);
  std::size_t seg = 0;
  double seg_end = segs.front().duration;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double mid = 0.5 * (grid[i] + grid[i + 1]);
    while (seg + 1 < segs.size() && mid > seg_end) {
      ++seg;
      seg_end += segs[seg].duration;
    }
    signs[i] = segs[seg].sign;
  }
  return signs;
}

std::vector<CoherenceResult> witness_many(
    const NoiseModel& noise, double mean_light_shift,
    const std::vector<std::vector<Segment>>& sets, int trials,
    std::uint64_t seed, Execution exec) {
  noise.validate();
  if (noise.target != NoiseTarget::tweezer_intensity)
    throw std::invalid_argument(
        "control coherence is driven by tweezer-intensity noise");
  if (trials < 100)
    throw std::invalid_argument("coherence estimate needs at least 100 trials");
  if (mean_light_shift < 0.0)
    throw std::invalid_argument("light shift must be nonnegative");

  const std::size_t n_sets = sets.size();
  const std::uint64_t mixed_seed = seed ^ noise.seed;
  std::vector<std::vector<double>> cosines(n_sets), sines(n_sets);
  for (auto& v : cosines) v.assign(static_cast<std::size_t>(trials), 0.0);
  for (auto& v : sines) v.assign(static_cast<std::size_t>(trials), 0.0);

  if (noise.kind == NoiseKind::quasi_static_gaussian) {
    // Shot-constant fractional offset: the phase is x * wls * signed time.
    // A balanced schedule has exactly zero signed time, so it cancels the
    // offset identically rather than just statistically.
    std::vector<double> signed_time(n_sets, 0.0);
    for (std::size_t s = 0; s < n_sets; ++s)
      for (const auto& seg : sets[s])
        signed_time[s] += seg.sign * seg.duration;
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (int t = 0; t < trials; ++t) {
      RandomStream rng(mixed_seed, kCoherenceChannel,
                       static_cast<std::uint64_t>(t));
      const double x = noise.amplitude * rng.next_normal();
      for (std::size_t s = 0; s < n_sets; ++s) {
        const double phi = x * mean_light_shift * signed_time[s];
        cosines[s][static_cast<std::size_t>(t)] = std::cos(phi);
        sines[s][static_cast<std::size_t>(t)] = std::sin(phi);
      }
    }
  } else {
    const std::vector<double> taus = component_times(noise);
    double tau_min = taus.front();
    double seg_min = sets.front().front().duration;
    for (double tc : taus) tau_min = std::min(tau_min, tc);
    for (const auto& set : sets)
      for (const auto& seg : set) seg_min = std::min(seg_min, seg.duration);
    const double resolution = std::min(tau_min / 10.0, seg_min / 16.0);
    const std::vector<double> grid = union_grid(sets, resolution);
    std::vector<std::vector<int>> signs(n_sets);
    for (std::size_t s = 0; s < n_sets; ++s)
      signs[s] = interval_signs(sets[s], grid);
    const double sigma_c = noise.amplitude / std::sqrt(double(taus.size()));

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (int t = 0; t < trials; ++t) {
      RandomStream rng(mixed_seed, kCoherenceChannel,
                       static_cast<std::uint64_t>(t));
      std::vector<double> state(taus.size());
      for (auto& x : state) x = sigma_c * rng.next_normal();
      double x_prev = 0.0;
      for (double x : state) x_prev += x;
      std::vector<double> phi(n_sets, 0.0);
      for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        double x_next = 0.0;
        for (std::size_t c = 0; c < taus.size(); ++c) {
          const double decay = std::exp(-h / taus[c]);
          state[c] = state[c] * decay +
                     sigma_c * std::sqrt(1.0 - decay * decay) *
                         rng.next_normal();
          x_next += state[c];
        }
        const double area = 0.5 * (x_prev + x_next) * h * mean_light_shift;
        for (std::size_t s = 0; s < n_sets; ++s)
          phi[s] += signs[s][i] * area;
        x_prev = x_next;
      }
      for (std::size_t s = 0; s < n_sets; ++s) {
        cosines[s][static_cast<std::size_t>(t)] = std::cos(phi[s]);
        sines[s][static_cast<std::size_t>(t)] = std::sin(phi[s]);
      }
    }
  }

  std::vector<CoherenceResult> results(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) {
    double mc = 0.0, ms = 0.0;
    for (int t = 0; t < trials; ++t) {
      mc += cosines[s][static_cast<std::size_t>(t)];
      ms += sines[s][static_cast<std::size_t>(t)];
    }
    mc /= trials;
    ms /= trials;
    double vc = 0.0, vs = 0.0, cv = 0.0;
    for (int t = 0; t < trials; ++t) {
      const double dc = cosines[s][static_cast<std::size_t>(t)] - mc;
      const double ds = sines[s][static_cast<std::size_t>(t)] - ms;
      vc += dc * dc;
      vs += ds * ds;
      cv += dc * ds;
    }
    const double norm = 1.0 / (static_cast<double>(trials) *
                               std::max(1, trials - 1));
    vc *= norm;
    vs *= norm;
    cv *= norm;
    const double w = std::hypot(mc, ms);
    CoherenceResult r;
    r.witness = w;
    r.trials = trials;
    if (w > 1e-12)
      r.witness_se = std::sqrt(std::max(
          0.0, (mc * mc * vc + ms * ms * vs + 2.0 * mc * ms * cv) / (w * w)));
    else
      r.witness_se = std::sqrt(std::max(0.0, vc + vs));
    results[s] = r;
  }
  return results;
}

} // namespace

void NoiseModel::validate() const {
  if (amplitude < 0.0)
    throw std::invalid_argument("noise amplitude must be nonnegative");
  if (kind != NoiseKind::quasi_static_gaussian && correlation_time <= 0.0)
    throw std::invalid_argument(
        "correlated noise needs a positive correlation time");
}

void GateParams::validate() const {
  context.validate();
  drive.validate();
  if (!(mode_trap_ratio >= 0.0) || !std::isfinite(mode_trap_ratio))
    throw std::invalid_argument("mode/trap ratio must be finite and nonnegative");
  if (conditional_shift < 0.0)
    throw std::invalid_argument("conditional shift must be nonnegative");
}

DDSchedule dd_schedule(double gate_time, int n_stages) {
  if (n_stages < 1)
    throw std::domain_error("decoupling needs at least one stage");
  if (!(gate_time > 0.0))
    throw std::domain_error("gate time must be positive");
  DDSchedule schedule;
  schedule.n_stages = n_stages;
  const double tau = gate_time / n_stages;
  schedule.stage_drive = tau;
  schedule.stage_idle = tau;
  schedule.total_time = 2.0 * gate_time;
  schedule.pulse_times.reserve(static_cast<std::size_t>(2 * n_stages));
  for (int s = 1; s <= 2 * n_stages; ++s)
    schedule.pulse_times.push_back(s * tau);
  return schedule;
}

CoherenceResult control_coherence(const NoiseModel& noise,
                                  double mean_light_shift, double duration,
                                  int trials, std::uint64_t seed,
                                  Execution exec) {
  if (!(duration > 0.0))
    throw std::invalid_argument("coherence window must be positive");
  std::vector<std::vector<Segment>> sets = {{Segment{duration, +1}}};
  return witness_many(noise, mean_light_shift, sets, trials, seed, exec)
      .front();
}

CoherenceResult control_coherence(const NoiseModel& noise,
                                  double mean_light_shift,
                                  const DDSchedule& schedule, int trials,
                                  std::uint64_t seed, Execution exec) {
  if (schedule.n_stages < 1)
    throw std::invalid_argument("schedule has no stages");
  std::vector<std::vector<Segment>> sets = {schedule_segments(schedule)};
  return witness_many(noise, mean_light_shift, sets, trials, seed, exec)
      .front();
}

std::vector<CoherenceResult> coherence_sweep(
    const NoiseModel& noise, double mean_light_shift, double gate_time,
    const std::vector<int>& stage_counts, int trials, std::uint64_t seed,
    Execution exec) {
  if (stage_counts.empty())
    throw std::invalid_argument("sweep needs at least one stage count");
  std::vector<std::vector<Segment>> sets;
  sets.reserve(stage_counts.size());
  for (int n : stage_counts)
    sets.push_back(schedule_segments(dd_schedule(gate_time, n)));
  return witness_many(noise, mean_light_shift, sets, trials, seed, exec);
}

FidelityStats gate_fidelity_mc(const GateParams& params,
                               const std::vector<NoiseModel>& noise,
                               int trials, std::uint64_t seed, Execution exec) {
  params.validate();
  for (const auto& model : noise) model.validate();
  if (trials < 100)
    throw std::invalid_argument("fidelity estimate needs at least 100 trials");

  std::vector<double> fidelity(static_cast<std::size_t>(trials), 0.0);

#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (int t = 0; t < trials; ++t) {
    double rabi_scale = 1.0;
    double mode_shift = 0.0;
    for (std::size_t m = 0; m < noise.size(); ++m) {
      RandomStream rng(seed ^ noise[m].seed, kFidelityChannel + m,
                       static_cast<std::uint64_t>(t));
      const double x = noise[m].amplitude * rng.next_normal();
      switch (noise[m].target) {
        case NoiseTarget::drive_intensity:
          rabi_scale *= std::sqrt(std::max(0.0, 1.0 + x));
          break;
        case NoiseTarget::trap_freq:
          mode_shift += params.mode_trap_ratio * x;
          break;
        case NoiseTarget::tweezer_intensity:
          // The conditional shift exists only while the control qubit pins
          // the mode; the bare-mode branch is immune to tweezer power.
          if (params.context.control == dynamics::Control::S)
            mode_shift += params.conditional_shift * x;
          break;
      }
    }
    dynamics::GateContext ctx = params.context;
    ctx.mode_freq += mode_shift;
    dynamics::DriveSpec drive = params.drive;
    for (auto& tone : drive.tones) tone.rabi *= rabi_scale;
    const dynamics::FinalState fs = dynamics::final_state(ctx, drive);
    fidelity[static_cast<std::size_t>(t)] = dynamics::state_fidelity(
        fs.p_ss, fs.p_dd, 2.0 * std::abs(fs.coherence), ctx.control);
  }

  FidelityStats stats;
  stats.trials = trials;
  double mean = 0.0;
  for (double f : fidelity) mean += f;
  mean /= trials;
  double var = 0.0;
  for (double f : fidelity) var += (f - mean) * (f - mean);
  stats.mean = mean;
  stats.stddev = trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0;

  std::vector<double> sorted = fidelity;
  std::sort(sorted.begin(), sorted.end());
  auto rank = [&](double q) {
    const int idx = static_cast<int>(std::ceil(q * trials)) - 1;
    return sorted[static_cast<std::size_t>(std::clamp(idx, 0, trials - 1))];
  };
  stats.p5 = rank(0.05);
  stats.p25 = rank(0.25);
  stats.p50 = rank(0.50);
  stats.p75 = rank(0.75);
  stats.p95 = rank(0.95);
  return stats;
}

} // namespace twz::noise
