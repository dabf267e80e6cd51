#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace modphase::cli {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("CSV has no column '" + name + "'");
  return columns[static_cast<std::size_t>(it - header.begin())];
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) out += (c ? "," : "") + table.header[c];
  out += '\n';
  const std::size_t n = table.rows();
  out.reserve(out.size() + n * table.columns.size() * 24);
  char buf[40];
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      const int len = std::snprintf(buf, sizeof buf, "%.17g", table.columns[c][r]);
      out.append(buf, static_cast<std::size_t>(len));
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      t.columns.resize(t.header.size());
      continue;
    }
    if (fields.size() != t.header.size())
      throw IoError("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) + " fields");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      auto [end, ec] = std::from_chars(fields[c].data(), fields[c].data() + fields[c].size(), v);
      if (ec != std::errc() || end != fields[c].data() + fields[c].size())
        throw IoError("CSV line " + std::to_string(line_no) + ": malformed number '" + std::string(fields[c]) + "'");
      t.columns[c].push_back(v);
    }
  }
  if (t.header.empty()) throw IoError("CSV is empty");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_text_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_vars) {
  CsvTable t;
  t.header.push_back("time");
  t.header.insert(t.header.end(), state_vars.begin(), state_vars.end());
  t.columns.push_back(traj.times());
  for (std::size_t v = 0; v < traj.dimension(); ++v) t.columns.push_back(traj.column(v));
  return to_csv(t);
}

std::string trace_csv(const ModulationTrace& tr) {
  return to_csv({{"time", "input", "modulator", "output", "gain"}, {tr.times, tr.input, tr.modulator, tr.output, tr.gain}});
}

std::string phase_csv(const PhaseSeries& ps) {
  return to_csv({{"time", "phase", "unwrapped", "amplitude"}, {ps.times, ps.phase, ps.unwrapped, ps.amplitude}});
}

nlohmann::ordered_json frames_json(const FrameSet& fs) {
  nlohmann::ordered_json j;
  j["grid"] = fs.grid;
  std::vector<double> lo(fs.grid.size(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(fs.grid.size(), -std::numeric_limits<double>::infinity());
  for (const auto& f : fs.frames) {
    for (std::size_t k = 0; k < f.curve.size(); ++k) {
      lo[k] = std::min(lo[k], f.curve[k]);
      hi[k] = std::max(hi[k], f.curve[k]);
    }
  }
  j["envelope_lo"] = lo;
  j["envelope_hi"] = hi;
  j["frames"] = nlohmann::ordered_json::array();
  for (const auto& f : fs.frames) {
    j["frames"].push_back({{"time", f.time},
                           {"modulator", f.modulator},
                           {"input", f.input},
                           {"output", f.output},
                           {"slope", f.slope},
                           {"curve", f.curve}});
  }
  return j;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace modphase::cli
