#include "fastlight/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace fastlight {

std::string channel_name(Channel ch) { return ch == Channel::Reference ? "reference" : "fast"; }

namespace {

ChannelModel make_channel(const ExperimentConfig& cfg, const SampledPulse<double>& input,
                          SampledPulse<double> output, GainTrace<double> gain, const std::vector<double>& delays) {
  ChannelModel m{std::move(output), std::move(gain), {}, {}};
  m.plan = make_sweep_plan(cfg.scene, input, m.gain, cfg.detector, delays, cfg.amplifier.reading);
  const ArrayX<double> cum = cumulative_signal(m.output);
  const double scale = cfg.detector.efficiency * cfg.detector.adu_gain;
  m.arrival_expected.reserve(delays.size());
  for (double d : delays) m.arrival_expected.push_back(scale * gate_photons(m.output, cum, d, cfg.detector.gate_width));
  return m;
}

}  // namespace

Experiment prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& p = cfg.pulse;
  const auto grid = TimeGrid<double>::spanning(p.grid_start, p.grid_stop, p.dt);
  auto input = make_gaussian_pulse(grid, p.t_peak, p.fwhm, p.photons_total);
  const auto delays = cfg.sweep.resolve();

  auto fast_out = propagate(input, cfg.medium);
  auto fast_gain = gain_profile(input, fast_out, cfg.amplifier.gain_floor);

  Experiment exp{cfg,
                 config_hash(cfg),
                 input,
                 make_channel(cfg, input, input, unity_gain<double>(grid.size()), delays),
                 make_channel(cfg, input, std::move(fast_out), std::move(fast_gain), delays),
                 cfg.regions(),
                 0.0,
                 {}};
  // Leading-edge time where I/I_peak = 1e-3.
  exp.onset = p.t_peak - p.fwhm * std::sqrt(std::log(1000.0) / (4 * std::log(2.0)));

  for (Channel ch : {Channel::Reference, Channel::Fast}) {
    const auto& plan = exp.channel(ch).plan;
    double brightest = 0;
    for (std::size_t i = 0; i < plan.delays.size(); ++i)
      brightest = std::max(brightest, plan.gate_photons[i] * plan.gate_gain[i]);
    for (const auto& r : exp.regions.max_regions) {
      const double photons = brightest * plan.weights.block(r.row0, r.col0, r.rows, r.cols).sum();
      if (photons < kGaussianSamplingMinPhotons) {
        exp.warnings.push_back(fmt::format(
            "{} channel: flank region at row {} collects only {:.0f} photons in the brightest gate; "
            "Gaussian count sampling is unreliable below {:.0f}",
            channel_name(ch), r.row0, photons, kGaussianSamplingMinPhotons));
        break;
      }
    }
  }
  return exp;
}

ChannelRun run_channel(const Experiment& exp, Channel ch, std::uint64_t seed, bool full_frame) {
  const RowSelection rows = full_frame ? RowSelection{} : exp.regions.rows_needed();
  ChannelRun run;
  run.stack = gate_sweep(exp.channel(ch).plan, seed, static_cast<std::uint64_t>(ch), rows);
  run.trace = visibility_trace(run.stack, exp.regions, exp.cfg.detector.threshold_D, exp.cfg.analysis.window);
  return run;
}

ChannelRun run_channel(const ExperimentConfig& cfg, Channel ch, std::uint64_t seed) {
  return run_channel(prepare(cfg), ch, seed);
}

SeedResult run_seed(const Experiment& exp, std::uint64_t seed) {
  SeedResult r;
  r.seed = seed;
  r.reference = run_channel(exp, Channel::Reference, seed).trace;
  r.fast = run_channel(exp, Channel::Fast, seed).trace;
  r.report = compare(r.reference, r.fast, exp.cfg.pulse.fwhm, exp.cfg.criteria());
  return r;
}

double Stats::standard_error() const { return count > 0 ? std / std::sqrt(static_cast<double>(count)) : 0.0; }

Stats summarize(const std::vector<double>& v) {
  Stats s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

namespace {

MeanTrace mean_trace(const std::vector<SeedResult>& seeds, bool fast) {
  const auto& first = fast ? seeds.front().fast : seeds.front().reference;
  const std::size_t n = first.size();
  MeanTrace m;
  m.delay = first.delay;
  m.visibility.assign(n, 0);
  m.spread.assign(n, 0);
  m.snr.assign(n, 0);
  m.cumulative.assign(n, 0);
  m.valid_count.assign(n, 0);
  std::vector<int> n_vis(n, 0), n_spread(n, 0);
  for (const auto& s : seeds) {
    const auto& t = fast ? s.fast : s.reference;
    const auto& cum = fast ? s.report.cumulative_fast : s.report.cumulative_reference;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isfinite(t.visibility[i])) {
        m.visibility[i] += t.visibility[i];
        ++n_vis[i];
      }
      if (std::isfinite(t.spread[i])) {
        m.spread[i] += t.spread[i];
        ++n_spread[i];
      }
      if (t.valid(i)) {
        m.snr[i] += t.snr[i];
        ++m.valid_count[i];
      }
      m.cumulative[i] += cum[i];
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto total = static_cast<double>(seeds.size());
  for (std::size_t i = 0; i < n; ++i) {
    m.visibility[i] = n_vis[i] ? m.visibility[i] / n_vis[i] : nan;
    m.spread[i] = n_spread[i] ? m.spread[i] / n_spread[i] : nan;
    m.snr[i] = m.valid_count[i] ? m.snr[i] / m.valid_count[i] : nan;
    m.cumulative[i] /= total;
  }
  return m;
}

}  // namespace

EnsembleResult run_ensemble(const Experiment& exp, ProgressFn progress) {
  const int n = exp.cfg.ensemble.n_seeds;
  std::vector<SeedResult> results(static_cast<std::size_t>(n));

  int workers = exp.cfg.ensemble.threads;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);

  std::atomic<int> next{0};
  std::mutex mu;
  int done = 0;
  std::exception_ptr failure;
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        results[static_cast<std::size_t>(i)] = run_seed(exp, exp.cfg.ensemble.base_seed + static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
      std::lock_guard lock(mu);
      ++done;
      if (progress) progress(done, n);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleResult e;
  e.hash = exp.hash;
  e.onset = exp.onset;
  e.pulse_fwhm = exp.cfg.pulse.fwhm;
  e.arrival_reference = exp.reference.arrival_expected;
  e.arrival_fast = exp.fast.arrival_expected;
  e.reference = mean_trace(results, false);
  e.fast = mean_trace(results, true);

  std::vector<double> t_ref, t_fast, adv;
  for (const auto& s : results) {
    if (s.report.t_detect_reference) t_ref.push_back(*s.report.t_detect_reference - exp.onset);
    if (s.report.t_detect_fast) t_fast.push_back(*s.report.t_detect_fast - exp.onset);
    if (s.report.advancement) adv.push_back(*s.report.advancement);
  }
  e.t_reference = summarize(t_ref);
  e.t_fast = summarize(t_fast);
  e.advancement = summarize(adv);
  if (e.advancement.count > 0) e.relative_advancement = e.advancement.mean / e.pulse_fwhm;
  e.window = longest_window(exceedance_windows(
      e.reference.delay, e.fast.cumulative, e.reference.cumulative,
      background_frames(e.reference.delay.size(), exp.cfg.analysis.background_fraction)));
  e.seeds = std::move(results);
  return e;
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg, ProgressFn progress) {
  return run_ensemble(prepare(cfg), std::move(progress));
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& parameter, double value) {
  ExperimentConfig out = cfg;
  if (parameter == "efficiency") {
    out.detector.efficiency = value;
  } else if (parameter == "gain" || parameter == "advancement") {
    if (out.medium.mode != MediumMode::Empirical)
      throw Error(ErrorCode::Config, "sweeping '" + parameter + "' needs an empirical medium");
    (parameter == "gain" ? out.medium.gain_total : out.medium.advancement) = value;
  } else {
    throw Error(ErrorCode::UnknownParameter, "unknown sweep parameter '" + parameter + "'");
  }
  out.validate();
  return out;
}

std::vector<SweepRow> sweep_parameter(const ExperimentConfig& cfg, const std::string& parameter,
                                      const std::vector<double>& values, ProgressFn progress) {
  std::vector<ExperimentConfig> cfgs;
  for (double v : values) cfgs.push_back(with_parameter(cfg, parameter, v));
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto e = run_ensemble(cfgs[i], progress);
    rows.push_back({values[i], e.advancement, e.advancement.count, e.window});
  }
  return rows;
}

}  // namespace fastlight
