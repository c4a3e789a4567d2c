#include <map>
#include <sstream>

#include "uwb/errors.hpp"
#include "uwb/pipeline.hpp"

namespace uwb::pipeline {

namespace {

struct ArtifactInfo {
  std::string kind;
  std::string version;
  std::string first_line;
};

ArtifactInfo sniff(const std::string& path, const std::string& text) {
  ArtifactInfo info;
  std::stringstream ss(text);
  if (!std::getline(ss, info.first_line))
    raise(ErrorCode::format_error, "empty artifact: " + path);
  if (!info.first_line.empty() && info.first_line.back() == '\r')
    info.first_line.pop_back();

  if (info.first_line == kDatasetHeader) {
    info.kind = "dataset";
    info.version = "1";  // dataset format carries its version in the header
    return info;
  }
  const auto comma = info.first_line.find(',');
  if (comma != std::string::npos &&
      info.first_line.rfind("uwbcal_", 0) == 0) {
    info.kind = info.first_line.substr(7, comma - 7);
    info.version = info.first_line.substr(comma + 1);
    return info;
  }
  raise(ErrorCode::format_error, "unrecognized artifact format: " + path);
}

}  // namespace

void cmd_report(std::span<const std::string> artifact_paths,
                const std::string& out_path) {
  if (artifact_paths.empty())
    raise(ErrorCode::usage_error, "report: no input artifacts given");

  std::string out = "uwbcal_report,1\n";
  std::map<ekf::RunMode, std::pair<double, std::size_t>> rmse_acc;

  std::string seen_version;
  for (const auto& path : artifact_paths) {
    const std::string text = read_text_file(path);
    const ArtifactInfo info = sniff(path, text);
    if (seen_version.empty()) seen_version = info.version;
    if (info.version != seen_version || info.version != "1")
      raise(ErrorCode::version_mismatch,
            "artifact " + path + " has format version " + info.version);

    out += "artifact," + info.kind + "," + path + "\n";
    if (info.kind == "dataset") {
      const sim::Dataset ds = parse_dataset(text);
      std::size_t with_truth = 0;
      for (const auto& tx : ds.transactions)
        if (tx.has_truth()) ++with_truth;
      out += "dataset_stats," + path + "," +
             std::to_string(ds.transactions.size()) + "," +
             (ds.transactions.empty()
                  ? "0,0"
                  : format_sig(ds.transactions.front().timestamp_s,
                               kDatasetDigits) +
                        "," +
                        format_sig(ds.transactions.back().timestamp_s,
                                   kDatasetDigits)) +
             "," + std::to_string(with_truth) + "\n";
    } else if (info.kind == "delays") {
      const auto sol = parse_delays(text);
      for (const auto& [tag, d] : sol.delays_ns)
        out += "delay," + std::to_string(tag) + "," +
               format_sig(d, kExactDigits) + "\n";
    } else if (info.kind == "powercal") {
      const auto cal = parse_powercal(text);
      out += "powercal," + format_sig(cal.alpha_dbm, kDatasetDigits) + "," +
             format_sig(cal.lift_min, kDatasetDigits) + "," +
             format_sig(cal.lift_max, kDatasetDigits) + "\n";
    } else if (info.kind == "rmse") {
      for (const auto& row : parse_rmse(text)) {
        out += "rmse," + row.scenario + "," + std::to_string(row.robot) +
               "," + ekf::run_mode_name(row.mode) + "," +
               format_sig(row.rmse_m, kDatasetDigits) + "\n";
        auto& acc = rmse_acc[row.mode];
        acc.first += row.rmse_m;
        ++acc.second;
      }
    }
    // Other kinds (reports, corrected datasets, trajectories) are listed
    // but not re-digested.
  }

  for (const auto& [mode, acc] : rmse_acc)
    out += "rmse_mean," + std::string(ekf::run_mode_name(mode)) + "," +
           format_sig(acc.first / static_cast<double>(acc.second),
                      kDatasetDigits) +
           "\n";

  write_text_file(out_path, out);
}

}  // namespace uwb::pipeline
