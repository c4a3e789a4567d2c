// Command-line front end for the uwbcal shared library. Talks to the C API
// only; exit codes are the library's status codes.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uwbcal.h"

namespace {

int fail(uwbcal_status status) {
  std::fprintf(stderr, "error: %s (%s)\n", uwbcal_last_error(),
               uwbcal_status_name(status));
  return static_cast<int>(status);
}

struct ConfigHandle {
  uwbcal_config* ptr = nullptr;
  ~ConfigHandle() { uwbcal_config_free(ptr); }
};
struct DatasetHandle {
  uwbcal_dataset* ptr = nullptr;
  ~DatasetHandle() { uwbcal_dataset_free(ptr); }
};
struct DelaysHandle {
  uwbcal_delays* ptr = nullptr;
  ~DelaysHandle() { uwbcal_delays_free(ptr); }
};
struct PowercalHandle {
  uwbcal_powercal* ptr = nullptr;
  ~PowercalHandle() { uwbcal_powercal_free(ptr); }
};

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int run_cli(int argc, char** argv);

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return UWBCAL_ERR_INTERNAL;
  }
}

namespace {

int run_cli(int argc, char** argv) {
  CLI::App app{"uwbcal: UWB two-way-ranging simulation and calibration"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate",
                                 "Generate a ranging dataset from a config");
  sim->add_option("--config", sim_config, "pipeline config file")->required();
  sim->add_option("--out", sim_out, "output dataset CSV")->required();

  // calibrate-delays
  std::string cd_dataset, cd_config, cd_loss, cd_out, cd_report;
  auto* cd = app.add_subcommand("calibrate-delays",
                                "Solve per-tag antenna delays");
  cd->add_option("--dataset", cd_dataset, "training dataset CSV")->required();
  cd->add_option("--config", cd_config, "pipeline config file");
  cd->add_option("--loss", cd_loss, "l2 or cauchy");
  cd->add_option("--out", cd_out, "output delay CSV")->required();
  cd->add_option("--report", cd_report, "diagnostics report CSV");

  // calibrate-power
  std::string cp_dataset, cp_delays, cp_config, cp_out, cp_report;
  auto* cp = app.add_subcommand("calibrate-power",
                                "Fit bias and std splines vs lifted FPP");
  cp->add_option("--dataset", cp_dataset, "training dataset CSV")->required();
  cp->add_option("--delays", cp_delays, "delay CSV from calibrate-delays")
      ->required();
  cp->add_option("--config", cp_config, "pipeline config file")->required();
  cp->add_option("--out", cp_out, "output calibration file")->required();
  cp->add_option("--report", cp_report, "curves report CSV");

  // apply
  std::string ap_dataset, ap_delays, ap_cal, ap_out, ap_report;
  auto* ap = app.add_subcommand("apply",
                                "Correct a dataset with both calibrations");
  ap->add_option("--dataset", ap_dataset, "dataset CSV")->required();
  ap->add_option("--delays", ap_delays, "delay CSV")->required();
  ap->add_option("--cal", ap_cal, "power calibration file")->required();
  ap->add_option("--out", ap_out, "corrected dataset CSV")->required();
  ap->add_option("--report", ap_report, "bias statistics report");

  // localize
  std::vector<std::string> lo_scenarios;
  std::string lo_delays, lo_cal, lo_modes, lo_out, lo_traj;
  auto* lo = app.add_subcommand("localize",
                                "Range-only EKF over scenario datasets");
  lo->add_option("--scenario", lo_scenarios,
                 "name:config:dataset triple (repeatable)")
      ->required();
  lo->add_option("--delays", lo_delays, "delay CSV");
  lo->add_option("--cal", lo_cal, "power calibration file");
  lo->add_option("--modes", lo_modes,
                 "comma list: raw,calibrated,calibrated_with_variance");
  lo->add_option("--out", lo_out, "RMSE report CSV")->required();
  lo->add_option("--traj-dir", lo_traj, "directory for trajectory CSVs");

  // report
  std::vector<std::string> rp_inputs;
  std::string rp_out;
  auto* rp = app.add_subcommand("report", "Merge artifacts into one summary");
  rp->add_option("--out", rp_out, "summary output path")->required();
  rp->add_option("inputs", rp_inputs, "artifact files");

  // optimal-delay helper
  double od_T = 0.0, od_dt32 = 0.0;
  auto* od = app.add_subcommand("optimal-delay",
                                "Information-optimal second-response delay");
  od->add_option("--T", od_T, "per-measurement overhead, seconds")->required();
  od->add_option("--dt32", od_dt32, "first reply delay, seconds")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : UWBCAL_ERR_USAGE;  // --help exits cleanly
  }

  if (sim->parsed()) {
    ConfigHandle cfg;
    if (auto s = uwbcal_config_load(sim_config.c_str(), &cfg.ptr)) return fail(s);
    DatasetHandle ds;
    if (auto s = uwbcal_simulate(cfg.ptr, sim_out.c_str(), &ds.ptr))
      return fail(s);
    std::printf("simulate: %zu transactions written to %s (%llu dropped)\n",
                uwbcal_dataset_size(ds.ptr), sim_out.c_str(),
                static_cast<unsigned long long>(uwbcal_dataset_dropped(ds.ptr)));
    return 0;
  }

  if (cd->parsed()) {
    DatasetHandle ds;
    if (auto s = uwbcal_dataset_load(cd_dataset.c_str(), &ds.ptr))
      return fail(s);
    ConfigHandle cfg;
    if (!cd_config.empty())
      if (auto s = uwbcal_config_load(cd_config.c_str(), &cfg.ptr))
        return fail(s);
    DelaysHandle delays;
    if (auto s = uwbcal_calibrate_delays(ds.ptr, cfg.ptr, opt(cd_loss),
                                         cd_out.c_str(), opt(cd_report),
                                         &delays.ptr))
      return fail(s);
    std::printf("calibrate-delays: %zu tags written to %s\n",
                uwbcal_delays_count(delays.ptr), cd_out.c_str());
    return 0;
  }

  if (cp->parsed()) {
    DatasetHandle ds;
    if (auto s = uwbcal_dataset_load(cp_dataset.c_str(), &ds.ptr))
      return fail(s);
    DelaysHandle delays;
    if (auto s = uwbcal_delays_load(cp_delays.c_str(), &delays.ptr))
      return fail(s);
    ConfigHandle cfg;
    if (auto s = uwbcal_config_load(cp_config.c_str(), &cfg.ptr))
      return fail(s);
    PowercalHandle cal;
    if (auto s = uwbcal_calibrate_power(ds.ptr, delays.ptr, cfg.ptr,
                                        cp_out.c_str(), opt(cp_report),
                                        &cal.ptr))
      return fail(s);
    std::printf("calibrate-power: calibration written to %s\n",
                cp_out.c_str());
    return 0;
  }

  if (ap->parsed()) {
    DatasetHandle ds;
    if (auto s = uwbcal_dataset_load(ap_dataset.c_str(), &ds.ptr))
      return fail(s);
    DelaysHandle delays;
    if (auto s = uwbcal_delays_load(ap_delays.c_str(), &delays.ptr))
      return fail(s);
    PowercalHandle cal;
    if (auto s = uwbcal_powercal_load(ap_cal.c_str(), &cal.ptr))
      return fail(s);
    if (auto s = uwbcal_apply(ds.ptr, delays.ptr, cal.ptr, ap_out.c_str(),
                              opt(ap_report)))
      return fail(s);
    std::printf("apply: corrected dataset written to %s\n", ap_out.c_str());
    return 0;
  }

  if (lo->parsed()) {
    std::vector<std::string> names;
    std::vector<ConfigHandle> cfgs(lo_scenarios.size());
    std::vector<DatasetHandle> dss(lo_scenarios.size());
    std::vector<const char*> name_ptrs;
    std::vector<const uwbcal_config*> cfg_ptrs;
    std::vector<const uwbcal_dataset*> ds_ptrs;
    for (std::size_t i = 0; i < lo_scenarios.size(); ++i) {
      const auto& spec = lo_scenarios[i];
      const auto c1 = spec.find(':');
      const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) {
        std::fprintf(stderr,
                     "error: --scenario expects name:config:dataset, got %s\n",
                     spec.c_str());
        return UWBCAL_ERR_USAGE;
      }
      names.push_back(spec.substr(0, c1));
      const std::string cfg_path = spec.substr(c1 + 1, c2 - c1 - 1);
      const std::string ds_path = spec.substr(c2 + 1);
      if (auto s = uwbcal_config_load(cfg_path.c_str(), &cfgs[i].ptr))
        return fail(s);
      if (auto s = uwbcal_dataset_load(ds_path.c_str(), &dss[i].ptr))
        return fail(s);
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      name_ptrs.push_back(names[i].c_str());
      cfg_ptrs.push_back(cfgs[i].ptr);
      ds_ptrs.push_back(dss[i].ptr);
    }
    DelaysHandle delays;
    if (!lo_delays.empty())
      if (auto s = uwbcal_delays_load(lo_delays.c_str(), &delays.ptr))
        return fail(s);
    PowercalHandle cal;
    if (!lo_cal.empty())
      if (auto s = uwbcal_powercal_load(lo_cal.c_str(), &cal.ptr))
        return fail(s);
    if (auto s = uwbcal_localize(name_ptrs.data(), cfg_ptrs.data(),
                                 ds_ptrs.data(), names.size(), delays.ptr,
                                 cal.ptr, opt(lo_modes), lo_out.c_str(),
                                 opt(lo_traj)))
      return fail(s);
    std::printf("localize: RMSE report written to %s\n", lo_out.c_str());
    return 0;
  }

  if (rp->parsed()) {
    std::vector<const char*> ptrs;
    for (const auto& p : rp_inputs) ptrs.push_back(p.c_str());
    if (auto s = uwbcal_report(ptrs.data(), ptrs.size(), rp_out.c_str()))
      return fail(s);
    std::printf("report: summary written to %s\n", rp_out.c_str());
    return 0;
  }

  if (od->parsed()) {
    double dt53 = 0.0;
    if (auto s = uwbcal_optimal_delay(od_T, od_dt32, &dt53)) return fail(s);
    std::printf("optimal dt53: %.9g s (%.6g us)\n", dt53, dt53 * 1e6);
    return 0;
  }

  return UWBCAL_ERR_USAGE;
}

}  // namespace
