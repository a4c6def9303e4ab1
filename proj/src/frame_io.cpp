#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fastlight/detector_iccd.hpp"

namespace fastlight {

namespace {

constexpr const char* kMagic = "FLSTACK 1";

std::string expect_key(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "truncated frame stack header");
  const auto eq = line.find('=');
  if (eq == std::string::npos || line.substr(0, eq) != key)
    throw Error(ErrorCode::Io, "expected header key '" + key + "', got '" + line + "'");
  return line.substr(eq + 1);
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error(ErrorCode::Io, "bad number '" + s + "'");
  return v;
}

}  // namespace

void write_frame_stack(const FrameStack& stack, const std::string& path, const std::string& config_hash) {
  std::string out;
  out += kMagic;
  out += '\n';
  RowSelection rows;
  if (!stack.frames.empty()) rows = stack.frames.front().sensor_rows;
  std::string row_list = "all";
  if (!rows.empty()) row_list = fmt::format("{}", fmt::join(rows, ","));
  out += fmt::format("width={}\nheight={}\nrows={}\nframes={}\n", stack.width_px, stack.height_px, row_list,
                     stack.frames.size());
  out += fmt::format("seed={}\nconfig_hash={}\ngate_width={}\n", stack.seed, config_hash, stack.gate_width);
  const auto& d = stack.detector;
  out += fmt::format("efficiency={}\ndark_mean={}\ndark_std={}\nthreshold_D={}\nadu_gain={}\n", d.efficiency,
                     d.dark_mean, d.dark_std, d.threshold_D, d.adu_gain);
  for (const auto& f : stack.frames) {
    const int expect_rows = rows.empty() ? stack.height_px : static_cast<int>(rows.size());
    if (f.sensor_rows != rows || f.rows() != expect_rows || f.cols() != stack.width_px)
      throw Error(ErrorCode::Io, "frames of a stack must share one shape");
    out += fmt::format("frame delay={}\n", f.gate_delay);
    for (int r = 0; r < f.rows(); ++r) {
      for (int c = 0; c < f.cols(); ++c) {
        if (c) out += ' ';
        out += fmt::format("{}", f.counts(r, c));
      }
      out += '\n';
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::Io, "cannot open " + path);
  file << out;
  if (!file) throw Error(ErrorCode::Io, "write failed for " + path);
}

FrameStack read_frame_stack(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != kMagic) throw Error(ErrorCode::Io, path + " is not a frame stack");

  FrameStack stack;
  stack.width_px = std::stoi(expect_key(in, "width"));
  stack.height_px = std::stoi(expect_key(in, "height"));
  const std::string row_list = expect_key(in, "rows");
  const auto n_frames = std::stoull(expect_key(in, "frames"));
  stack.seed = std::stoull(expect_key(in, "seed"));
  expect_key(in, "config_hash");
  stack.gate_width = to_double(expect_key(in, "gate_width"));
  stack.detector.gate_width = stack.gate_width;
  stack.detector.efficiency = to_double(expect_key(in, "efficiency"));
  stack.detector.dark_mean = to_double(expect_key(in, "dark_mean"));
  stack.detector.dark_std = to_double(expect_key(in, "dark_std"));
  stack.detector.threshold_D = to_double(expect_key(in, "threshold_D"));
  stack.detector.adu_gain = to_double(expect_key(in, "adu_gain"));
  RowSelection sensor_rows;
  if (row_list != "all") {
    std::stringstream ls(row_list);
    for (std::string cell; std::getline(ls, cell, ',');) sensor_rows.push_back(std::stoi(cell));
  }
  for (std::size_t i = 0; i < sensor_rows.size(); ++i)
    if (sensor_rows[i] < 0 || sensor_rows[i] >= stack.height_px || (i > 0 && sensor_rows[i] <= sensor_rows[i - 1]))
      throw Error(ErrorCode::Io, "row list must be increasing sensor rows");
  const int rows = sensor_rows.empty() ? stack.height_px : static_cast<int>(sensor_rows.size());

  stack.frames.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    if (!std::getline(in, line) || line.rfind("frame delay=", 0) != 0)
      throw Error(ErrorCode::Io, "missing frame header");
    ImageFrame f{CountImage(rows, stack.width_px), to_double(line.substr(12)), sensor_rows};
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < stack.width_px; ++c)
        if (!(in >> f.counts(r, c))) throw Error(ErrorCode::Io, "truncated frame data");
    in >> std::ws;
    stack.frames.push_back(std::move(f));
  }
  check_uniform_delays(stack.delays());
  return stack;
}

}  // namespace fastlight
