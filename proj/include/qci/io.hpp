#pragma once

#include "qci/gld.hpp"
#include "qci/intervals.hpp"
#include "qci/simulation.hpp"

#include <istream>
#include <string>
#include <vector>

//! Data files, probability grids, and CSV serialization.
namespace qci {

//! Single-column CSV or newline-delimited reals. Blank lines and lines
//! starting with '#' are skipped; a non-numeric first line is a header.
//! Any other non-numeric row raises ErrorCode::parse with its line number.
std::vector<double> parse_data(std::istream& in, const std::string& source);
std::vector<double> read_data_file(const std::string& path);

//! "0.1,0.5,0.9" or "start:stop:step" (inclusive of stop up to rounding).
std::vector<double> parse_grid(const std::string& text);

//! %g with the given significant digits; "inf", "-inf", "NA" for non-finite.
std::string format_real(double v, int precision = 6);

//! Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string ci_csv_header();
std::string ci_csv_row(const QuantileCI& ci, int precision = 6);
std::string two_sample_csv_header();
std::string two_sample_csv_row(const TwoSampleCI& ci, int precision = 6);

std::string coverage_csv(const CoverageReport& report,
                         bool two_sample,
                         int precision = 6);
std::string mse_csv(const MseReport& report, int precision = 6);
std::string gld_bias_csv(const GldBiasReport& report, int precision = 6);

} // namespace qci
