#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vbsim/coupling_model.hpp"
#include "vbsim/odmr_engine.hpp"

// Plain comma-separated files with a single header row. Numbers are written
// with 9 significant digits so regression output is stable across runs.
namespace vbsim::csv {

std::string format_number(double value);

// Header `freq_mhz,signal`.
OdmrSpectrum read_spectrum(std::istream& in);
void write_spectrum(std::ostream& out, const OdmrSpectrum& spectrum);

// Header `magnitude,f_minus_mhz,f_plus_mhz`.
void write_scatter(std::ostream& out, const ScatterDataset& data);

// Header `power_mw,pl`.
std::vector<Sample> read_pl_series(std::istream& in);

// Flat key=value block.
void write_fit_result(std::ostream& out, const FitResult& fit);

}  // namespace vbsim::csv
