#include "fastlight/outputs.hpp"

#include <fstream>

#include <fmt/format.h>

namespace fastlight {

namespace {

std::string provenance(const std::string& hash, std::uint64_t seed, const std::string& kind) {
  return fmt::format("# kind={}\n# config_hash={}\n# seed={}\n", kind, hash, seed);
}

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "none"; }

std::string window_text(const std::optional<TimeWindow>& w, double onset) {
  if (!w) return "window_lo_s=none\nwindow_hi_s=none\nwindow_lo_after_onset_s=none\nwindow_hi_after_onset_s=none\n";
  return fmt::format("window_lo_s={}\nwindow_hi_s={}\nwindow_lo_after_onset_s={}\nwindow_hi_after_onset_s={}\n", w->lo,
                     w->hi, w->lo - onset, w->hi - onset);
}

}  // namespace

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path);
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path);
}

std::string status_name(FrameStatus s) {
  switch (s) {
    case FrameStatus::Warmup: return "warmup";
    case FrameStatus::Valid: return "valid";
    case FrameStatus::InvalidVisibility: return "invalid";
    case FrameStatus::ZeroSpread: return "zero_spread";
  }
  return "unknown";
}

std::string trace_csv(const Experiment& exp, Channel ch, const VisibilityTrace& t,
                      const std::vector<double>& cumulative, std::uint64_t seed) {
  const auto& arrival = exp.channel(ch).arrival_expected;
  std::string s = provenance(exp.hash, seed, "trace");
  s += fmt::format("# channel={}\n# onset_s={}\n# threshold={}\n", channel_name(ch), exp.onset,
                   exp.cfg.analysis.threshold);
  s += "delay_s,time_after_onset_s,M,dM,snr,cumulative_snr,status,arrival_expected\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    s += fmt::format("{},{},{},{},{},{},{},{}\n", t.delay[i], t.delay[i] - exp.onset, t.visibility[i], t.spread[i],
                     t.snr[i], cumulative[i], status_name(t.status[i]), arrival[i]);
  return s;
}

std::string mean_trace_csv(const EnsembleResult& e, const ExperimentConfig& cfg, Channel ch) {
  const auto& m = ch == Channel::Reference ? e.reference : e.fast;
  const auto& arrival = ch == Channel::Reference ? e.arrival_reference : e.arrival_fast;
  std::string s = provenance(e.hash, cfg.ensemble.base_seed, "ensemble_trace");
  s += fmt::format("# channel={}\n# n_seeds={}\n# onset_s={}\n# threshold={}\n", channel_name(ch), e.seeds.size(),
                   e.onset, cfg.analysis.threshold);
  s += "delay_s,time_after_onset_s,M,dM,snr,cumulative_snr,valid_count,arrival_expected\n";
  for (std::size_t i = 0; i < m.delay.size(); ++i)
    s += fmt::format("{},{},{},{},{},{},{},{}\n", m.delay[i], m.delay[i] - e.onset, m.visibility[i], m.spread[i],
                     m.snr[i], m.cumulative[i], m.valid_count[i], arrival[i]);
  return s;
}

std::string report_text(const Experiment& exp, const DetectionReport& r, std::uint64_t seed) {
  std::string s = provenance(exp.hash, seed, "report");
  s += fmt::format("onset_s={}\npulse_fwhm_s={}\n", exp.onset, exp.cfg.pulse.fwhm);
  s += fmt::format("t_detect_reference_s={}\nt_detect_fast_s={}\n", opt(r.t_detect_reference), opt(r.t_detect_fast));
  s += fmt::format("advancement_s={}\nrelative_advancement={}\n", opt(r.advancement), opt(r.relative_advancement));
  s += fmt::format("floor_reference={}\nfloor_fast={}\n", r.floor_reference, r.floor_fast);
  s += window_text(r.window_fast_exceeds_reference, exp.onset);
  return s;
}

std::string ensemble_summary_text(const EnsembleResult& e, const ExperimentConfig& cfg) {
  std::string s = provenance(e.hash, cfg.ensemble.base_seed, "ensemble_summary");
  s += fmt::format("n_seeds={}\nonset_s={}\npulse_fwhm_s={}\n", e.seeds.size(), e.onset, e.pulse_fwhm);
  auto stats = [&](const char* name, const Stats& st) {
    s += fmt::format("{}_count={}\n{}_mean_s={}\n{}_std_s={}\n{}_se_s={}\n", name, st.count, name, st.mean, name,
                     st.std, name, st.standard_error());
  };
  stats("t_detect_reference_after_onset", e.t_reference);
  stats("t_detect_fast_after_onset", e.t_fast);
  stats("advancement", e.advancement);
  s += fmt::format("relative_advancement={}\n", opt(e.relative_advancement));
  s += window_text(e.window, e.onset);
  return s;
}

std::string seed_table_csv(const EnsembleResult& e, const ExperimentConfig& cfg) {
  std::string s = provenance(e.hash, cfg.ensemble.base_seed, "ensemble_seeds");
  s += "seed,t_detect_reference_s,t_detect_fast_s,advancement_s\n";
  for (const auto& r : e.seeds)
    s += fmt::format("{},{},{},{}\n", r.seed, opt(r.report.t_detect_reference), opt(r.report.t_detect_fast),
                     opt(r.report.advancement));
  return s;
}

std::string sweep_table_csv(const std::vector<SweepRow>& rows, const std::string& parameter,
                            const ExperimentConfig& cfg) {
  std::string s = provenance(config_hash(cfg), cfg.ensemble.base_seed, "sweep");
  s += fmt::format("# parameter={}\n", parameter);
  s += "value,detected_pairs,advancement_mean_s,advancement_std_s,advancement_se_s,window_lo_s,window_hi_s\n";
  for (const auto& r : rows) {
    const auto& a = r.advancement;
    s += fmt::format("{},{},{},{},{},{},{}\n", r.value, r.detected_pairs, a.mean, a.std, a.standard_error(),
                     r.window ? fmt::format("{}", r.window->lo) : "none",
                     r.window ? fmt::format("{}", r.window->hi) : "none");
  }
  return s;
}

std::string calibration_text(const DoubletCalibration& cal, const NarrowbandCheck& check,
                             const ExperimentConfig& cfg) {
  std::string s = provenance(config_hash(cfg), 0, "calibration");
  const auto& t = cfg.calibration.target;
  s += fmt::format("target_group_index={}\ntarget_carrier_gain={}\ndetuning_ratio={}\nlength_m={}\n", t.group_index,
                   t.carrier_gain, t.detuning_ratio, t.length);
  s += fmt::format("achieved_group_index={}\nachieved_carrier_gain={}\niterations={}\n", cal.achieved_group_index,
                   cal.achieved_carrier_gain, cal.iterations);
  for (std::size_t i = 0; i < cal.medium.lines.size(); ++i) {
    const auto& l = cal.medium.lines[i];
    s += fmt::format("line{}_center_detuning_hz={}\nline{}_half_width_hz={}\nline{}_strength={}\n", i,
                     l.center_detuning, i, l.half_width, i, l.strength);
  }
  s += fmt::format("check_pulse_fwhm_s={}\ncheck_band_halfwidth_hz={}\n", check.pulse_fwhm, check.band_halfwidth);
  s += fmt::format("min_gain_in_band={}\nmax_gain_in_band={}\n", check.min_gain_in_band, check.max_gain_in_band);
  s += fmt::format("predicted_delay_s={}\nmeasured_peak_shift_s={}\nrelative_error={}\n", check.predicted_shift,
                   check.measured_shift, check.relative_error());
  return s;
}

}  // namespace fastlight
