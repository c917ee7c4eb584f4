#include "vbsim/csv_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "vbsim/error.hpp"

namespace vbsim::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double to_double(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw InputError(fmt::format("csv line {}: '{}' is not a number", line_no, cell));
  return v;
}

// Reads a two-column file with the given header into (a, b) pairs.
std::vector<std::pair<double, double>> read_two_columns(std::istream& in, std::string_view first,
                                                        std::string_view second) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!have_header) {
      if (cells.size() != 2 || cells[0] != first || cells[1] != second)
        throw InputError(fmt::format("csv: expected header '{},{}'", first, second));
      have_header = true;
      continue;
    }
    if (cells.size() != 2)
      throw InputError(fmt::format("csv line {}: expected 2 columns, got {}", line_no, cells.size()));
    rows.emplace_back(to_double(cells[0], line_no), to_double(cells[1], line_no));
  }
  if (!have_header) throw InputError("csv: file is empty");
  return rows;
}

}  // namespace

std::string format_number(double value) { return fmt::format("{:.9g}", value); }

OdmrSpectrum read_spectrum(std::istream& in) {
  OdmrSpectrum s;
  for (const auto& [f, v] : read_two_columns(in, "freq_mhz", "signal")) {
    s.freqs.push_back(f);
    s.signal.push_back(v);
  }
  s.validate();
  return s;
}

void write_spectrum(std::ostream& out, const OdmrSpectrum& spectrum) {
  out << "freq_mhz,signal\n";
  for (std::size_t i = 0; i < spectrum.freqs.size(); ++i)
    fmt::print(out, "{:.9g},{:.9g}\n", spectrum.freqs[i], spectrum.signal[i]);
}

void write_scatter(std::ostream& out, const ScatterDataset& data) {
  out << "magnitude,f_minus_mhz,f_plus_mhz\n";
  for (const ScatterRow& r : data)
    fmt::print(out, "{:.9g},{:.9g},{:.9g}\n", r.magnitude, r.f_minus, r.f_plus);
}

std::vector<Sample> read_pl_series(std::istream& in) {
  std::vector<Sample> out;
  for (const auto& [p, pl] : read_two_columns(in, "power_mw", "pl")) out.push_back({p, pl});
  return out;
}

void write_fit_result(std::ostream& out, const FitResult& fit) {
  fmt::print(out, "rho_c_nm3={:.9g}\n", fit.rho_c);
  fmt::print(out, "contrast={:.9g}\n", fit.contrast);
  fmt::print(out, "residual={:.9g}\n", fit.residual);
  fmt::print(out, "step_rho_nm3={:.9g}\n", fit.step_rho);
  fmt::print(out, "step_contrast={:.9g}\n", fit.step_contrast);
  for (std::size_t c = 0; c < fit.cycle_objectives.size(); ++c)
    fmt::print(out, "cycle{}_objective={:.9g}\n", c + 1, fit.cycle_objectives[c]);
  fmt::print(out, "at_boundary={}\n", fit.at_boundary ? "true" : "false");
  if (fit.at_boundary) fmt::print(out, "boundary_note={}\n", fit.boundary_note);
}

}  // namespace vbsim::csv
