#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "modphase/ode.hpp"

namespace modphase::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitNotOscillatory = 4;

struct Perturbation {
  std::string param;
  double relative_change = 0.0;
};

struct RunConfig {
  std::string system;       // built-in name
  std::string definition;   // path to a definition file, alternative to `system`
  IntegratorConfig integrator{};
  std::set<std::string> outputs{"trajectory", "trace", "phase", "symmetry", "manifold", "frames"};
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  std::optional<Perturbation> perturbation;
  std::size_t frames = 60;
};

// "d:-0.10" -> {d, -0.10}. Throws modphase::Error(InvalidArgument).
Perturbation parse_perturbation(const std::string& spec);

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_classify(const RunConfig& config, std::ostream& out, std::ostream& err);

enum class Figure { IoSpace, IogViews, TimeseriesGain, PolarPhaseGain };

struct RenderConfig {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  Figure figure = Figure::IogViews;
  std::optional<std::size_t> frames;  // io_space only; default all available
};

int cmd_render(const RenderConfig& config, std::ostream& out, std::ostream& err);

// Full command line (argv[0] included). Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace modphase::cli
