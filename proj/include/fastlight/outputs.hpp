#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fastlight/analysis_snr.hpp"
#include "fastlight/dispersion_medium.hpp"
#include "fastlight/experiment.hpp"

namespace fastlight {

/// Every file starts with `# key=value` provenance lines naming the config
/// hash and seed. Tables are CSV with a header row; reports are key=value.

void write_text(const std::string& path, const std::string& text);

std::string trace_csv(const Experiment& exp, Channel ch, const VisibilityTrace& trace,
                      const std::vector<double>& cumulative, std::uint64_t seed);
std::string mean_trace_csv(const EnsembleResult& e, const ExperimentConfig& cfg, Channel ch);
std::string report_text(const Experiment& exp, const DetectionReport& r, std::uint64_t seed);
std::string ensemble_summary_text(const EnsembleResult& e, const ExperimentConfig& cfg);
std::string seed_table_csv(const EnsembleResult& e, const ExperimentConfig& cfg);
std::string sweep_table_csv(const std::vector<SweepRow>& rows, const std::string& parameter,
                            const ExperimentConfig& cfg);
std::string calibration_text(const DoubletCalibration& cal, const NarrowbandCheck& check, const ExperimentConfig& cfg);

std::string status_name(FrameStatus s);

}  // namespace fastlight
