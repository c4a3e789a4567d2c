#include "uwb/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "uwb/errors.hpp"

namespace uwb::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    raise(ErrorCode::config_error, "bad numeric value for " + key + ": " + v);
  return d;
}

long long to_int(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const long long d = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    raise(ErrorCode::config_error, "bad integer value for " + key + ": " + v);
  return d;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  raise(ErrorCode::config_error, "bad boolean value for " + key + ": " + v);
}

std::vector<double> to_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, key));
  }
  return out;
}

std::vector<int> to_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  for (double d : to_list(v, key)) out.push_back(static_cast<int>(d));
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&t](const std::string& key, double SimulationConfig::*field) {
      t[key] = [field](PipelineConfig& c, const std::string& k,
                       const std::string& v) {
        c.simulation.*field = to_double(v, k);
      };
    };
    auto list = [&t](const std::string& key,
                     std::vector<double> SimulationConfig::*field) {
      t[key] = [field](PipelineConfig& c, const std::string& k,
                       const std::string& v) {
        c.simulation.*field = to_list(v, k);
      };
    };

    t["simulation.seed"] = [](PipelineConfig& c, const std::string& k,
                              const std::string& v) {
      c.simulation.seed = static_cast<std::uint64_t>(to_int(v, k));
      c.simulation.seed_set = true;
    };
    num("simulation.duration_s", &SimulationConfig::duration_s);
    num("simulation.rate_hz", &SimulationConfig::rate_hz);
    t["simulation.robots"] = [](PipelineConfig& c, const std::string& k,
                                const std::string& v) {
      c.simulation.robots = static_cast<int>(to_int(v, k));
    };
    t["simulation.tags_per_robot"] = [](PipelineConfig& c,
                                        const std::string& k,
                                        const std::string& v) {
      c.simulation.tags_per_robot = static_cast<int>(to_int(v, k));
    };
    list("simulation.box_center_m", &SimulationConfig::box_center);
    list("simulation.box_halfextent_m", &SimulationConfig::box_halfextent);
    num("simulation.trajectory_fill", &SimulationConfig::trajectory_fill);
    num("simulation.freq_lo_hz", &SimulationConfig::freq_lo_hz);
    num("simulation.freq_hi_hz", &SimulationConfig::freq_hi_hz);
    num("simulation.attitude_amp_rad", &SimulationConfig::attitude_amp_rad);
    num("simulation.yaw_amp_rad", &SimulationConfig::yaw_amp_rad);
    num("simulation.tag_radius_m", &SimulationConfig::tag_radius_m);
    list("simulation.delays_ns", &SimulationConfig::delays_ns);
    num("simulation.delay_range_ns", &SimulationConfig::delay_range_ns);
    list("simulation.skews_ppm", &SimulationConfig::skews_ppm);
    num("simulation.skew_range_ppm", &SimulationConfig::skew_range_ppm);
    list("simulation.offsets_ns", &SimulationConfig::offsets_ns);
    num("simulation.offset_range_ns", &SimulationConfig::offset_range_ns);
    num("simulation.timestamp_noise_ns", &SimulationConfig::timestamp_noise_ns);
    num("simulation.dt32_us", &SimulationConfig::dt32_us);
    num("simulation.dt53_us", &SimulationConfig::dt53_us);
    num("simulation.delay_jitter", &SimulationConfig::delay_jitter);
    t["simulation.power_bias"] = [](PipelineConfig& c, const std::string& k,
                                    const std::string& v) {
      c.simulation.power_bias = to_bool(v, k);
    };
    t["simulation.power_hetero"] = [](PipelineConfig& c, const std::string& k,
                                      const std::string& v) {
      c.simulation.power_hetero = to_bool(v, k);
    };
    num("simulation.fpp_p0_dbm", &SimulationConfig::fpp_p0_dbm);
    num("simulation.fpp_exponent", &SimulationConfig::fpp_exponent);
    num("simulation.fpp_perturb_db", &SimulationConfig::fpp_perturb_db);
    t["simulation.fpp_perturb_harmonic"] = [](PipelineConfig& c,
                                              const std::string& k,
                                              const std::string& v) {
      c.simulation.fpp_perturb_harmonic = static_cast<int>(to_int(v, k));
    };
    num("simulation.fpp_noise_db", &SimulationConfig::fpp_noise_db);
    num("simulation.fpp_min_dbm", &SimulationConfig::fpp_min_dbm);
    num("simulation.fpp_max_dbm", &SimulationConfig::fpp_max_dbm);
    num("simulation.alpha_dbm", &SimulationConfig::alpha_dbm);
    list("simulation.rho_bias_dbm", &SimulationConfig::rho_bias_dbm);
    list("simulation.rho_bias_ns", &SimulationConfig::rho_bias_ns);
    list("simulation.rho_std_dbm", &SimulationConfig::rho_std_dbm);
    list("simulation.rho_std_m", &SimulationConfig::rho_std_m);
    num("simulation.outlier_prob", &SimulationConfig::outlier_prob);
    num("simulation.outlier_mean_m", &SimulationConfig::outlier_mean_m);

    t["calibration.loss"] = [](PipelineConfig& c, const std::string& k,
                               const std::string& v) {
      if (v == "l2")
        c.calibration.loss = delaycal::LossKind::l2;
      else if (v == "cauchy")
        c.calibration.loss = delaycal::LossKind::cauchy;
      else
        raise(ErrorCode::config_error, k + " must be l2 or cauchy, got " + v);
    };
    t["calibration.alpha_dbm"] = [](PipelineConfig& c, const std::string& k,
                                    const std::string& v) {
      c.calibration.alpha_dbm = to_double(v, k);
    };
    t["calibration.min_samples"] = [](PipelineConfig& c, const std::string& k,
                                      const std::string& v) {
      c.calibration.min_samples = static_cast<std::size_t>(to_int(v, k));
    };
    t["calibration.quantile_knots"] = [](PipelineConfig& c,
                                         const std::string& k,
                                         const std::string& v) {
      c.calibration.quantile_knots = static_cast<int>(to_int(v, k));
    };
    t["calibration.cv_folds"] = [](PipelineConfig& c, const std::string& k,
                                   const std::string& v) {
      c.calibration.cv_folds = static_cast<int>(to_int(v, k));
    };
    t["calibration.window"] = [](PipelineConfig& c, const std::string& k,
                                 const std::string& v) {
      c.calibration.window = static_cast<std::size_t>(to_int(v, k));
    };
    t["calibration.stride"] = [](PipelineConfig& c, const std::string& k,
                                 const std::string& v) {
      c.calibration.stride = static_cast<std::size_t>(to_int(v, k));
    };
    t["calibration.histogram_bin_ns"] = [](PipelineConfig& c,
                                           const std::string& k,
                                           const std::string& v) {
      c.calibration.histogram_bin_ns = to_double(v, k);
    };

    t["evaluation.gate_confidence"] = [](PipelineConfig& c,
                                         const std::string& k,
                                         const std::string& v) {
      c.evaluation.gate_confidence = to_double(v, k);
    };
    t["evaluation.process_noise"] = [](PipelineConfig& c,
                                       const std::string& k,
                                       const std::string& v) {
      c.evaluation.process_noise = to_double(v, k);
    };
    t["evaluation.sigma_fixed_m"] = [](PipelineConfig& c,
                                       const std::string& k,
                                       const std::string& v) {
      c.evaluation.sigma_fixed_m = to_double(v, k);
    };
    t["evaluation.init_std_m"] = [](PipelineConfig& c, const std::string& k,
                                    const std::string& v) {
      c.evaluation.init_std_m = to_double(v, k);
    };
    t["evaluation.init_cov_m2"] = [](PipelineConfig& c, const std::string& k,
                                     const std::string& v) {
      c.evaluation.init_cov_m2 = to_double(v, k);
    };
    t["evaluation.skip_s"] = [](PipelineConfig& c, const std::string& k,
                                const std::string& v) {
      c.evaluation.skip_s = to_double(v, k);
    };
    t["evaluation.focus_robots"] = [](PipelineConfig& c, const std::string& k,
                                      const std::string& v) {
      c.evaluation.focus_robots = to_int_list(v, k);
    };
    return t;
  }();
  return table;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::config_error,
            "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = key_table();
    const auto it = table.find(key);
    if (it == table.end())
      raise(ErrorCode::config_error,
            "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace uwb::pipeline
