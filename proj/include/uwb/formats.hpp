#pragma once

#include <string>

#include "uwb/delaycal.hpp"
#include "uwb/powercal.hpp"
#include "uwb/sim.hpp"

namespace uwb::pipeline {

/// Dataset CSV column header, fixed order, bit-exact round trips.
inline constexpr const char* kDatasetHeader =
    "t_s,initiator,responder,dt41_ns,dt32_ns,dt53_ns,dt64_ns,"
    "fpp2_dbm,fpp4_dbm,truth_tof_ns,truth_range_m";

inline constexpr int kDatasetDigits = 12;   ///< significant digits in dataset files
inline constexpr int kExactDigits = 17;     ///< exact double round trip

std::string format_sig(double v, int digits);
double parse_double_strict(const std::string& s);

/// Value after a 12-significant-digit format/parse round trip; datasets are
/// quantized through this so in-memory and on-disk pipelines agree
/// bit-for-bit.
double canonical_value(double v);
sim::Dataset canonical_quantize(sim::Dataset ds);

std::string serialize_dataset(const sim::Dataset& ds);
sim::Dataset parse_dataset(const std::string& text);
void save_dataset(const sim::Dataset& ds, const std::string& path);
sim::Dataset load_dataset(const std::string& path);

std::string serialize_delays(const delaycal::DelaySolution& sol);
delaycal::DelaySolution parse_delays(const std::string& text);
void save_delays(const delaycal::DelaySolution& sol, const std::string& path);
delaycal::DelaySolution load_delays(const std::string& path);

std::string serialize_powercal(const powercal::PowerCalibration& cal);
powercal::PowerCalibration parse_powercal(const std::string& text);
void save_powercal(const powercal::PowerCalibration& cal,
                   const std::string& path);
powercal::PowerCalibration load_powercal(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace uwb::pipeline
