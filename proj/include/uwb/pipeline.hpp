#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uwb/config.hpp"
#include "uwb/ekf.hpp"
#include "uwb/formats.hpp"

namespace uwb::pipeline {

/// Materializes the ground-truth world (trajectories, tags, power model,
/// pair set) from the simulation block. Deterministic per seed.
sim::World build_world(const SimulationConfig& cfg);
sim::ScheduleConfig build_schedule(const SimulationConfig& cfg);

struct SimulateSummary {
  std::size_t transactions = 0;
  std::uint64_t dropped = 0;
};

/// simulate: config -> canonically quantized dataset (written when out_path
/// is nonempty). The returned dataset is bit-identical to a parse of the
/// written file.
sim::Dataset cmd_simulate(const PipelineConfig& cfg, const std::string& out_path,
                          SimulateSummary* summary = nullptr);

/// calibrate-delays: dataset -> delay solution + optional files (delay CSV,
/// diagnostics report with pre/post residual histograms).
delaycal::DelaySolution cmd_calibrate_delays(const sim::Dataset& dataset,
                                             const PipelineConfig& cfg,
                                             const std::string& out_delays,
                                             const std::string& out_report);

/// calibrate-power: dataset + delays -> power calibration + optional files
/// (calibration CSV, per-pair and pooled curve report).
powercal::PowerCalibration cmd_calibrate_power(const sim::Dataset& dataset,
                                               const delaycal::DelaySolution& delays,
                                               const PipelineConfig& cfg,
                                               const std::string& out_cal,
                                               const std::string& out_report);

struct ApplyStats {
  double mean_abs_raw_m = 0.0;
  double mean_abs_delaycal_m = 0.0;
  double mean_abs_fullcal_m = 0.0;
  double std_raw_m = 0.0;
  double std_delaycal_m = 0.0;
  double std_fullcal_m = 0.0;
  std::size_t count = 0;
};

/// apply: corrected dataset + bias statistics (raw / delay-only / full).
/// Never mutates its inputs; stats need truth ranges.
ApplyStats cmd_apply(const sim::Dataset& dataset,
                     const delaycal::DelaySolution& delays,
                     const powercal::PowerCalibration& cal,
                     const std::string& out_corrected,
                     const std::string& out_report);

struct LocalizeScenario {
  std::string name;
  PipelineConfig config;   ///< config that generated the dataset
  sim::Dataset dataset;
};

struct RmseRow {
  std::string scenario;
  int robot = 0;
  ekf::RunMode mode = ekf::RunMode::raw;
  double rmse_m = 0.0;
};

/// localize: EKF over scenarios x focus robots x modes. Trajectory CSVs go
/// to traj_dir when nonempty.
std::vector<RmseRow> cmd_localize(std::span<const LocalizeScenario> scenarios,
                                  const delaycal::DelaySolution* delays,
                                  const powercal::PowerCalibration* cal,
                                  std::span<const ekf::RunMode> modes,
                                  const std::string& out_rmse,
                                  const std::string& traj_dir);

std::string serialize_rmse(std::span<const RmseRow> rows);
std::vector<RmseRow> parse_rmse(const std::string& text);

/// report: merges previously produced artifacts into one summary file.
/// Empty input is a usage error; differing format versions raise
/// VersionMismatch.
void cmd_report(std::span<const std::string> artifact_paths,
                const std::string& out_path);

}  // namespace uwb::pipeline
