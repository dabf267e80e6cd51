#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "modphase/modulation.hpp"
#include "modphase/ode.hpp"
#include "modphase/phase.hpp"

namespace modphase::cli {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Column-oriented CSV with a header row. Values are written with 17
// significant digits so they read back bit-exactly.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>& column(const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& state_vars);
std::string trace_csv(const ModulationTrace& trace);
std::string phase_csv(const PhaseSeries& phase);
nlohmann::ordered_json frames_json(const FrameSet& frames);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace modphase::cli
