#include "fastlight/plot_emitter.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fastlight/error.hpp"
#include "fastlight/outputs.hpp"

namespace fastlight {

namespace fs = std::filesystem;

std::string figure_name(FigureId id) {
  switch (id) {
    case FigureId::Arrival: return "arrival";
    case FigureId::Visibility: return "visibility";
    case FigureId::Snr: return "snr";
    case FigureId::IntegratedSnr: return "integrated_snr";
  }
  return "unknown";
}

FigureId parse_figure_id(const std::string& name) {
  for (auto id : {FigureId::Arrival, FigureId::Visibility, FigureId::Snr, FigureId::IntegratedSnr})
    if (figure_name(id) == name) return id;
  throw Error(ErrorCode::UnknownParameter, "unknown figure '" + name + "'");
}

bool TraceTable::has(const std::string& name) const {
  for (const auto& c : columns)
    if (c == name) return true;
  return false;
}

const std::vector<double>& TraceTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return values[i];
  throw Error(ErrorCode::MissingSeries, "trace has no column '" + name + "'");
}

TraceTable parse_trace_table(const std::string& text) {
  TraceTable t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) t.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns = cells;
      t.values.resize(cells.size());
      continue;
    }
    if (cells.size() != t.columns.size()) throw Error(ErrorCode::Io, "ragged trace row");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = std::stod(cells[i]);
      } catch (const std::exception&) {
        // non-numeric cells (status names) are kept as NaN
      }
      t.values[i].push_back(v);
    }
  }
  return t;
}

RunArtifacts load_artifacts(const std::string& dir) {
  RunArtifacts a;
  for (const char* ch : {"reference", "fast"}) {
    const fs::path p = fs::path(dir) / fmt::format("trace_{}.csv", ch);
    if (!fs::exists(p)) continue;
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    a.traces[ch] = parse_trace_table(ss.str());
  }
  return a;
}

FigureBundle emit_figure(const RunArtifacts& artifacts, FigureId id) {
  if (artifacts.traces.empty()) throw Error(ErrorCode::MissingSeries, "no traces to plot");
  FigureBundle b;
  b.id = id;
  b.x_label = "time after pulse onset";
  b.x_unit = "s";
  std::string column;
  switch (id) {
    case FigureId::Arrival:
      column = "arrival_expected";
      b.y_label = "spatially integrated detected signal";
      b.y_unit = "counts per gate";
      break;
    case FigureId::Visibility:
      column = "M";
      b.y_label = "stripe visibility";
      b.y_unit = "1";
      break;
    case FigureId::Snr:
      column = "snr";
      b.y_label = "visibility SNR";
      b.y_unit = "1";
      break;
    case FigureId::IntegratedSnr:
      column = "cumulative_snr";
      b.y_label = "integrated SNR minus background";
      b.y_unit = "s";
      break;
  }
  // Fixed order: reference first.
  for (const char* ch : {"reference", "fast"}) {
    const auto it = artifacts.traces.find(ch);
    if (it == artifacts.traces.end()) continue;
    const auto& t = it->second;
    if (!t.has("time_after_onset_s") || !t.has(column))
      throw Error(ErrorCode::MissingSeries, fmt::format("{} trace lacks '{}'", ch, column));
    b.series.push_back({ch, t.column("time_after_onset_s"), t.column(column)});
    if (b.config_hash.empty() && t.meta.count("config_hash")) b.config_hash = t.meta.at("config_hash");
  }
  if (b.series.empty()) throw Error(ErrorCode::MissingSeries, "no reference or fast trace");
  if (id == FigureId::Snr) {
    const auto& first = artifacts.traces.begin()->second;
    const double thr = first.meta.count("threshold") ? std::stod(first.meta.at("threshold")) : 1.0;
    const auto& x = b.series.front().x;
    b.series.push_back({"threshold", x, std::vector<double>(x.size(), thr)});
  }
  return b;
}

std::vector<std::string> write_figure(const FigureBundle& b, const std::string& dir) {
  fs::create_directories(dir);
  const std::string fig = figure_name(b.id);
  std::vector<std::string> written;
  std::string manifest = fmt::format("# kind=figure_manifest\n# config_hash={}\nfigure={}\n", b.config_hash, fig);
  manifest += fmt::format("x_label={}\nx_unit={}\ny_label={}\ny_unit={}\nseries={}\n", b.x_label, b.x_unit, b.y_label,
                          b.y_unit, b.series.size());
  for (const auto& s : b.series) {
    const std::string name = fmt::format("{}_{}.csv", fig, s.name);
    std::string body = fmt::format("# config_hash={}\n# figure={}\n# series={}\nx,y\n", b.config_hash, fig, s.name);
    for (std::size_t i = 0; i < s.x.size(); ++i) body += fmt::format("{},{}\n", s.x[i], s.y[i]);
    write_text((fs::path(dir) / name).string(), body);
    manifest += fmt::format("file={}\n", name);
    written.push_back(name);
  }
  const std::string mname = fmt::format("{}_manifest.txt", fig);
  write_text((fs::path(dir) / mname).string(), manifest);
  written.push_back(mname);
  return written;
}

}  // namespace fastlight
