#include "uwb/formats.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uwb/errors.hpp"

namespace uwb::pipeline {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

int parse_int_strict(const std::string& s) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    raise(ErrorCode::format_error, "bad integer field: '" + s + "'");
  return static_cast<int>(v);
}

// Versioned files start with "<kind>,<version>".
void check_version_line(const std::string& line, const std::string& kind) {
  const auto f = split(line, ',');
  if (f.size() != 2 || f[0] != kind)
    raise(ErrorCode::format_error,
          "expected " + kind + " header, got '" + line + "'");
  if (f[1] != "1")
    raise(ErrorCode::version_mismatch,
          kind + " version " + f[1] + " unsupported (expected 1)");
}

std::string join_values(const std::vector<double>& v) {
  std::string out;
  for (double d : v) {
    out += ',';
    out += format_sig(d, kExactDigits);
  }
  return out;
}

std::vector<double> parse_value_list(const std::vector<std::string>& fields,
                                     std::size_t offset) {
  if (fields.size() < offset + 1)
    raise(ErrorCode::format_error, "truncated value list");
  const auto n = static_cast<std::size_t>(parse_int_strict(fields[offset]));
  if (fields.size() != offset + 1 + n)
    raise(ErrorCode::format_error, "value list length mismatch");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = parse_double_strict(fields[offset + 1 + i]);
  return out;
}

}  // namespace

std::string format_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

double parse_double_strict(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    raise(ErrorCode::format_error, "bad numeric field: '" + s + "'");
  return v;
}

double canonical_value(double v) {
  return parse_double_strict(format_sig(v, kDatasetDigits));
}

sim::Dataset canonical_quantize(sim::Dataset ds) {
  for (auto& tx : ds.transactions) {
    tx.timestamp_s = canonical_value(tx.timestamp_s);
    tx.intervals.dt41 = canonical_value(tx.intervals.dt41);
    tx.intervals.dt32 = canonical_value(tx.intervals.dt32);
    tx.intervals.dt53 = canonical_value(tx.intervals.dt53);
    tx.intervals.dt64 = canonical_value(tx.intervals.dt64);
    tx.fpp2_dbm = canonical_value(tx.fpp2_dbm);
    tx.fpp4_dbm = canonical_value(tx.fpp4_dbm);
    if (tx.has_truth()) {
      tx.truth_tof_ns = canonical_value(tx.truth_tof_ns);
      tx.truth_range_m = canonical_value(tx.truth_range_m);
    }
  }
  return ds;
}

std::string serialize_dataset(const sim::Dataset& ds) {
  std::string out = kDatasetHeader;
  out += '\n';
  for (const auto& tx : ds.transactions) {
    out += format_sig(tx.timestamp_s, kDatasetDigits);
    out += ',';
    out += std::to_string(tx.initiator_id);
    out += ',';
    out += std::to_string(tx.responder_id);
    for (double v : {tx.intervals.dt41, tx.intervals.dt32, tx.intervals.dt53,
                     tx.intervals.dt64, tx.fpp2_dbm, tx.fpp4_dbm}) {
      out += ',';
      out += format_sig(v, kDatasetDigits);
    }
    if (tx.has_truth()) {
      out += ',';
      out += format_sig(tx.truth_tof_ns, kDatasetDigits);
      out += ',';
      out += format_sig(tx.truth_range_m, kDatasetDigits);
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

sim::Dataset parse_dataset(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.empty() || rows[0] != kDatasetHeader)
    raise(ErrorCode::format_error, "dataset: missing or wrong column header");

  sim::Dataset ds;
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].empty()) continue;
    const auto f = split(rows[r], ',');
    if (f.size() != 11)
      raise(ErrorCode::format_error,
            "dataset row " + std::to_string(r) + ": expected 11 columns");
    sim::TwrTransaction tx;
    tx.timestamp_s = parse_double_strict(f[0]);
    tx.initiator_id = parse_int_strict(f[1]);
    tx.responder_id = parse_int_strict(f[2]);
    tx.intervals.dt41 = parse_double_strict(f[3]);
    tx.intervals.dt32 = parse_double_strict(f[4]);
    tx.intervals.dt53 = parse_double_strict(f[5]);
    tx.intervals.dt64 = parse_double_strict(f[6]);
    tx.fpp2_dbm = parse_double_strict(f[7]);
    tx.fpp4_dbm = parse_double_strict(f[8]);
    const bool has9 = !f[9].empty();
    const bool has10 = !f[10].empty();
    if (has9 != has10)
      raise(ErrorCode::format_error,
            "dataset row " + std::to_string(r) + ": partial truth columns");
    if (has9) {
      tx.truth_tof_ns = parse_double_strict(f[9]);
      tx.truth_range_m = parse_double_strict(f[10]);
    }
    if (!(tx.timestamp_s > prev_t))
      raise(ErrorCode::format_error,
            "dataset row " + std::to_string(r) +
                ": timestamps must strictly increase");
    prev_t = tx.timestamp_s;
    if (tx.intervals.dt41 <= 0.0 || tx.intervals.dt32 <= 0.0 ||
        tx.intervals.dt53 <= 0.0 || tx.intervals.dt64 <= 0.0)
      raise(ErrorCode::format_error,
            "dataset row " + std::to_string(r) + ": nonpositive interval");
    ds.transactions.push_back(tx);
  }
  return ds;
}

void save_dataset(const sim::Dataset& ds, const std::string& path) {
  write_text_file(path, serialize_dataset(ds));
}

sim::Dataset load_dataset(const std::string& path) {
  return parse_dataset(read_text_file(path));
}

std::string serialize_delays(const delaycal::DelaySolution& sol) {
  std::string out = "uwbcal_delays,1\n";
  out += "tag_id,delay_ns\n";
  for (const auto& [tag, d] : sol.delays_ns) {
    out += std::to_string(tag);
    out += ',';
    out += format_sig(d, kExactDigits);
    out += '\n';
  }
  return out;
}

delaycal::DelaySolution parse_delays(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.size() < 2)
    raise(ErrorCode::format_error, "delay file: truncated");
  check_version_line(rows[0], "uwbcal_delays");
  if (rows[1] != "tag_id,delay_ns")
    raise(ErrorCode::format_error, "delay file: wrong column header");
  delaycal::DelaySolution sol;
  for (std::size_t r = 2; r < rows.size(); ++r) {
    if (rows[r].empty()) continue;
    const auto f = split(rows[r], ',');
    if (f.size() != 2)
      raise(ErrorCode::format_error, "delay file: expected 2 columns");
    sol.delays_ns[parse_int_strict(f[0])] = parse_double_strict(f[1]);
  }
  if (sol.delays_ns.empty())
    raise(ErrorCode::format_error, "delay file: no entries");
  return sol;
}

void save_delays(const delaycal::DelaySolution& sol, const std::string& path) {
  write_text_file(path, serialize_delays(sol));
}

delaycal::DelaySolution load_delays(const std::string& path) {
  return parse_delays(read_text_file(path));
}

std::string serialize_powercal(const powercal::PowerCalibration& cal) {
  std::string out = "uwbcal_powercal,1\n";
  out += "alpha_dbm," + format_sig(cal.alpha_dbm, kExactDigits) + "\n";
  out += "domain," + format_sig(cal.lift_min, kExactDigits) + "," +
         format_sig(cal.lift_max, kExactDigits) + "\n";
  out += "bias_knots," + std::to_string(cal.bias_m.knots.size()) +
         join_values(cal.bias_m.knots) + "\n";
  out += "bias_coefs," + std::to_string(cal.bias_m.coefs.size()) +
         join_values(cal.bias_m.coefs) + "\n";
  out += "std_knots," + std::to_string(cal.std_m.knots.size()) +
         join_values(cal.std_m.knots) + "\n";
  out += "std_coefs," + std::to_string(cal.std_m.coefs.size()) +
         join_values(cal.std_m.coefs) + "\n";
  return out;
}

powercal::PowerCalibration parse_powercal(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.size() < 7)
    raise(ErrorCode::format_error, "power calibration file: truncated");
  check_version_line(rows[0], "uwbcal_powercal");

  powercal::PowerCalibration cal;
  auto expect = [&](std::size_t r, const std::string& tag) {
    const auto f = split(rows[r], ',');
    if (f.empty() || f[0] != tag)
      raise(ErrorCode::format_error,
            "power calibration file: expected '" + tag + "' row");
    return f;
  };
  cal.alpha_dbm = parse_double_strict(expect(1, "alpha_dbm").at(1));
  {
    const auto f = expect(2, "domain");
    if (f.size() != 3)
      raise(ErrorCode::format_error, "power calibration file: bad domain row");
    cal.lift_min = parse_double_strict(f[1]);
    cal.lift_max = parse_double_strict(f[2]);
  }
  cal.bias_m.knots = parse_value_list(expect(3, "bias_knots"), 1);
  cal.bias_m.coefs = parse_value_list(expect(4, "bias_coefs"), 1);
  cal.std_m.knots = parse_value_list(expect(5, "std_knots"), 1);
  cal.std_m.coefs = parse_value_list(expect(6, "std_coefs"), 1);
  if (cal.bias_m.knots.size() != cal.bias_m.coefs.size() + 4 ||
      cal.std_m.knots.size() != cal.std_m.coefs.size() + 4)
    raise(ErrorCode::format_error,
          "power calibration file: knot/coefficient count mismatch");
  return cal;
}

void save_powercal(const powercal::PowerCalibration& cal,
                   const std::string& path) {
  write_text_file(path, serialize_powercal(cal));
}

powercal::PowerCalibration load_powercal(const std::string& path) {
  return parse_powercal(read_text_file(path));
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io_error, "cannot open for writing: " + path);
  out << content;
  if (!out) raise(ErrorCode::io_error, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace uwb::pipeline
