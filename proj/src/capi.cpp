#include "uwbcal.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "uwb/errors.hpp"
#include "uwb/gating.hpp"
#include "uwb/pipeline.hpp"
#include "uwb/twr.hpp"

using uwb::pipeline::PipelineConfig;

struct uwbcal_config {
  PipelineConfig cfg;
};
struct uwbcal_dataset {
  uwb::sim::Dataset ds;
};
struct uwbcal_delays {
  uwb::delaycal::DelaySolution sol;
};
struct uwbcal_powercal {
  uwb::powercal::PowerCalibration cal;
};

namespace {

thread_local std::string t_last_error;

uwbcal_status from_exception() {
  try {
    throw;
  } catch (const uwb::Error& e) {
    t_last_error = e.what();
    return static_cast<uwbcal_status>(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return UWBCAL_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return UWBCAL_ERR_INTERNAL;
  }
}

template <typename Fn>
uwbcal_status wrap(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return UWBCAL_OK;
  } catch (...) {
    return from_exception();
  }
}

uwbcal_status require(bool cond, const char* message) {
  if (cond) return UWBCAL_OK;
  t_last_error = message;
  return UWBCAL_ERR_USAGE;
}

std::vector<uwb::ekf::RunMode> parse_modes(const char* modes) {
  using uwb::ekf::RunMode;
  if (modes == nullptr)
    return {RunMode::raw, RunMode::calibrated,
            RunMode::calibrated_with_variance};
  std::vector<RunMode> out;
  std::string s(modes);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const std::string item =
        s.substr(pos, comma == std::string::npos ? std::string::npos
                                                 : comma - pos);
    if (item == "raw")
      out.push_back(RunMode::raw);
    else if (item == "calibrated")
      out.push_back(RunMode::calibrated);
    else if (item == "calibrated_with_variance")
      out.push_back(RunMode::calibrated_with_variance);
    else if (!item.empty())
      uwb::raise(uwb::ErrorCode::usage_error, "unknown mode '" + item + "'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty())
    uwb::raise(uwb::ErrorCode::usage_error, "no localization modes given");
  return out;
}

}  // namespace

extern "C" {

const char* uwbcal_version(void) { return "1.0.0"; }

const char* uwbcal_status_name(uwbcal_status status) {
  return uwb::error_code_name(static_cast<uwb::ErrorCode>(status));
}

const char* uwbcal_last_error(void) { return t_last_error.c_str(); }

uwbcal_status uwbcal_config_load(const char* path, uwbcal_config** out) {
  if (auto s = require(path && out, "config_load: NULL argument")) return s;
  return wrap([&] {
    *out = new uwbcal_config{uwb::pipeline::load_config(path)};
  });
}

uwbcal_status uwbcal_config_parse(const char* text, uwbcal_config** out) {
  if (auto s = require(text && out, "config_parse: NULL argument")) return s;
  return wrap([&] {
    *out = new uwbcal_config{uwb::pipeline::parse_config(text)};
  });
}

void uwbcal_config_free(uwbcal_config* cfg) { delete cfg; }

uwbcal_status uwbcal_simulate(const uwbcal_config* cfg, const char* out_path,
                              uwbcal_dataset** out) {
  if (auto s = require(cfg && out, "simulate: NULL argument")) return s;
  return wrap([&] {
    *out = new uwbcal_dataset{uwb::pipeline::cmd_simulate(
        cfg->cfg, out_path ? out_path : "")};
  });
}

uwbcal_status uwbcal_dataset_load(const char* path, uwbcal_dataset** out) {
  if (auto s = require(path && out, "dataset_load: NULL argument")) return s;
  return wrap([&] {
    *out = new uwbcal_dataset{uwb::pipeline::load_dataset(path)};
  });
}

uwbcal_status uwbcal_dataset_save(const uwbcal_dataset* ds, const char* path) {
  if (auto s = require(ds && path, "dataset_save: NULL argument")) return s;
  return wrap([&] { uwb::pipeline::save_dataset(ds->ds, path); });
}

size_t uwbcal_dataset_size(const uwbcal_dataset* ds) {
  return ds ? ds->ds.transactions.size() : 0;
}

uint64_t uwbcal_dataset_dropped(const uwbcal_dataset* ds) {
  return ds ? ds->ds.dropped : 0;
}

void uwbcal_dataset_free(uwbcal_dataset* ds) { delete ds; }

uwbcal_status uwbcal_calibrate_delays(const uwbcal_dataset* ds,
                                      const uwbcal_config* cfg,
                                      const char* loss,
                                      const char* out_delays,
                                      const char* out_report,
                                      uwbcal_delays** out) {
  if (auto s = require(ds && out, "calibrate_delays: NULL argument")) return s;
  return wrap([&] {
    PipelineConfig c = cfg ? cfg->cfg : PipelineConfig{};
    if (loss != nullptr) {
      if (std::strcmp(loss, "l2") == 0)
        c.calibration.loss = uwb::delaycal::LossKind::l2;
      else if (std::strcmp(loss, "cauchy") == 0)
        c.calibration.loss = uwb::delaycal::LossKind::cauchy;
      else
        uwb::raise(uwb::ErrorCode::usage_error,
                   std::string("unknown loss '") + loss + "'");
    }
    *out = new uwbcal_delays{uwb::pipeline::cmd_calibrate_delays(
        ds->ds, c, out_delays ? out_delays : "",
        out_report ? out_report : "")};
  });
}

uwbcal_status uwbcal_delays_load(const char* path, uwbcal_delays** out) {
  if (auto s = require(path && out, "delays_load: NULL argument")) return s;
  return wrap([&] {
    *out = new uwbcal_delays{uwb::pipeline::load_delays(path)};
  });
}

uwbcal_status uwbcal_delays_save(const uwbcal_delays* d, const char* path) {
  if (auto s = require(d && path, "delays_save: NULL argument")) return s;
  return wrap([&] { uwb::pipeline::save_delays(d->sol, path); });
}

uwbcal_status uwbcal_delays_get(const uwbcal_delays* d, int32_t tag_id,
                                double* delay_ns) {
  if (auto s = require(d && delay_ns, "delays_get: NULL argument")) return s;
  return wrap([&] { *delay_ns = d->sol.delay(tag_id); });
}

size_t uwbcal_delays_count(const uwbcal_delays* d) {
  return d ? d->sol.delays_ns.size() : 0;
}

void uwbcal_delays_free(uwbcal_delays* d) { delete d; }

uwbcal_status uwbcal_calibrate_power(const uwbcal_dataset* ds,
                                     const uwbcal_delays* delays,
                                     const uwbcal_config* cfg,
                                     const char* out_cal,
                                     const char* out_report,
                                     uwbcal_powercal** out) {
  if (auto s = require(ds && delays && out, "calibrate_power: NULL argument"))
    return s;
  return wrap([&] {
    *out = new uwbcal_powercal{uwb::pipeline::cmd_calibrate_power(
        ds->ds, delays->sol, cfg ? cfg->cfg : PipelineConfig{},
        out_cal ? out_cal : "", out_report ? out_report : "")};
  });
}

uwbcal_status uwbcal_powercal_load(const char* path, uwbcal_powercal** out) {
  if (auto s = require(path && out, "powercal_load: NULL argument")) return s;
  return wrap([&] {
    *out = new uwbcal_powercal{uwb::pipeline::load_powercal(path)};
  });
}

uwbcal_status uwbcal_powercal_save(const uwbcal_powercal* cal,
                                   const char* path) {
  if (auto s = require(cal && path, "powercal_save: NULL argument")) return s;
  return wrap([&] { uwb::pipeline::save_powercal(cal->cal, path); });
}

uwbcal_status uwbcal_powercal_apply(const uwbcal_powercal* cal,
                                    double raw_range_m, double fpp2_dbm,
                                    double fpp4_dbm, double* corrected_m,
                                    double* sigma_m) {
  if (auto s = require(cal && corrected_m && sigma_m,
                       "powercal_apply: NULL argument"))
    return s;
  return wrap([&] {
    const auto [c, s] =
        uwb::powercal::apply(raw_range_m, fpp2_dbm, fpp4_dbm, cal->cal);
    *corrected_m = c;
    *sigma_m = s;
  });
}

void uwbcal_powercal_free(uwbcal_powercal* cal) { delete cal; }

uwbcal_status uwbcal_apply(const uwbcal_dataset* ds,
                           const uwbcal_delays* delays,
                           const uwbcal_powercal* cal,
                           const char* out_corrected, const char* out_report) {
  if (auto s = require(ds && delays && cal && out_corrected,
                       "apply: NULL argument"))
    return s;
  return wrap([&] {
    uwb::pipeline::cmd_apply(ds->ds, delays->sol, cal->cal, out_corrected,
                             out_report ? out_report : "");
  });
}

uwbcal_status uwbcal_localize(const char* const* scenario_names,
                              const uwbcal_config* const* configs,
                              const uwbcal_dataset* const* datasets,
                              size_t n_scenarios, const uwbcal_delays* delays,
                              const uwbcal_powercal* cal, const char* modes,
                              const char* out_rmse, const char* traj_dir) {
  if (auto s = require(scenario_names && configs && datasets && out_rmse &&
                           n_scenarios > 0,
                       "localize: NULL argument or no scenarios"))
    return s;
  return wrap([&] {
    const auto mode_list = parse_modes(modes);
    std::vector<uwb::pipeline::LocalizeScenario> scenarios;
    scenarios.reserve(n_scenarios);
    for (size_t i = 0; i < n_scenarios; ++i) {
      if (!scenario_names[i] || !configs[i] || !datasets[i])
        uwb::raise(uwb::ErrorCode::usage_error,
                   "localize: NULL scenario entry");
      scenarios.push_back({scenario_names[i], configs[i]->cfg,
                           datasets[i]->ds});
    }
    uwb::pipeline::cmd_localize(
        scenarios, delays ? &delays->sol : nullptr, cal ? &cal->cal : nullptr,
        mode_list, out_rmse, traj_dir ? traj_dir : "");
  });
}

uwbcal_status uwbcal_report(const char* const* artifact_paths, size_t n,
                            const char* out_path) {
  if (auto s = require(artifact_paths && out_path, "report: NULL argument"))
    return s;
  return wrap([&] {
    std::vector<std::string> paths;
    paths.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      if (!artifact_paths[i])
        uwb::raise(uwb::ErrorCode::usage_error, "report: NULL path entry");
      paths.emplace_back(artifact_paths[i]);
    }
    uwb::pipeline::cmd_report(paths, out_path);
  });
}

double uwbcal_ss_twr_tof(double dt41_ns, double dt32_ns) {
  uwb::twr::TwrIntervals iv;
  iv.dt41 = dt41_ns;
  iv.dt32 = dt32_ns;
  return uwb::twr::ss_twr_tof(iv);
}

uwbcal_status uwbcal_ds_twr_tof(double dt41_ns, double dt32_ns, double dt53_ns,
                                double dt64_ns, double* tof_ns) {
  if (auto s = require(tof_ns != nullptr, "ds_twr_tof: NULL output")) return s;
  return wrap([&] {
    uwb::twr::TwrIntervals iv{dt41_ns, dt32_ns, dt53_ns, dt64_ns};
    *tof_ns = uwb::twr::ds_twr_tof(iv);
  });
}

uwbcal_status uwbcal_optimal_delay(double T_s, double dt32_s, double* dt53_s) {
  if (auto s = require(dt53_s != nullptr, "optimal_delay: NULL output"))
    return s;
  return wrap([&] { *dt53_s = uwb::twr::optimal_delay(T_s, dt32_s); });
}

uwbcal_status uwbcal_chi2_threshold(double confidence, int32_t dof,
                                    double* gamma) {
  if (auto s = require(gamma != nullptr, "chi2_threshold: NULL output"))
    return s;
  return wrap([&] { *gamma = uwb::gating::chi2_threshold(confidence, dof); });
}

double uwbcal_lift(double fpp_dbm, double alpha_dbm) {
  return uwb::powercal::lift(fpp_dbm, alpha_dbm);
}

}  // extern "C"
