#pragma once

#include <map>
#include <string>
#include <vector>

namespace fastlight {

enum class FigureId { Arrival, Visibility, Snr, IntegratedSnr };

std::string figure_name(FigureId id);
FigureId parse_figure_id(const std::string& name);

/// A trace CSV read back as numeric columns, with its `# key=value` header.
struct TraceTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // one vector per column

  bool has(const std::string& column) const;
  const std::vector<double>& column(const std::string& name) const;
};

TraceTable parse_trace_table(const std::string& text);

/// Trace tables of an output directory keyed by channel name.
struct RunArtifacts {
  std::map<std::string, TraceTable> traces;
};

RunArtifacts load_artifacts(const std::string& dir);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct FigureBundle {
  FigureId id = FigureId::Arrival;
  std::string x_label;
  std::string x_unit;
  std::string y_label;
  std::string y_unit;
  std::string config_hash;
  std::vector<Series> series;
};

/// Projects stored trace columns onto a figure; values are copied, never
/// recomputed. Throws missing-series when a channel or column is absent.
FigureBundle emit_figure(const RunArtifacts& artifacts, FigureId id);

/// Writes `<figure>_<series>.csv` per series and `<figure>_manifest.txt`.
/// Returns the written file names in order.
std::vector<std::string> write_figure(const FigureBundle& bundle, const std::string& dir);

}  // namespace fastlight
