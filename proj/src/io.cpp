#include "qci/io.hpp"
#include "qci/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qci {

namespace {

std::string trim(const std::string& s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_real(const std::string& text, double& out)
{
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+')
    ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

std::string opt_real(const std::optional<double>& v, int precision)
{
  return v ? format_real(*v, precision) : std::string("NA");
}

} // namespace

std::vector<double> parse_data(std::istream& in, const std::string& source)
{
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string field = trim(line);
    if (field.empty() || field[0] == '#')
      continue;
    const bool first = !seen_content;
    seen_content = true;
    if (field.find(',') != std::string::npos)
      fail(ErrorCode::parse,
           source + ":" + std::to_string(line_no) +
             ": expected a single column, found '" + field + "'");
    double v = 0.0;
    if (!parse_real(field, v)) {
      if (first)
        continue; // header
      fail(ErrorCode::parse,
           source + ":" + std::to_string(line_no) + ": '" + field +
             "' is not a number");
    }
    if (!std::isfinite(v))
      fail(ErrorCode::parse,
           source + ":" + std::to_string(line_no) + ": non-finite value");
    values.push_back(v);
  }
  if (values.empty())
    fail(ErrorCode::empty_data, source + ": no data values");
  return values;
}

std::vector<double> read_data_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::parse, "cannot open data file '" + path + "'");
  return parse_data(in, path);
}

std::vector<double> parse_grid(const std::string& text)
{
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ':')) {
      double v = 0.0;
      if (!parse_real(trim(item), v))
        fail(ErrorCode::parse, "invalid grid '" + text + "'");
      parts.push_back(v);
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
      fail(ErrorCode::parse,
           "grid '" + text + "' must be start:stop:step with step > 0");
    const double count = std::floor((parts[1] - parts[0]) / parts[2] + 1e-9);
    for (double i = 0.0; i <= count; i += 1.0) {
      // rounding keeps 0.1:0.9:0.1 landing on the decimal values
      const double v = parts[0] + i * parts[2];
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
  }
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!parse_real(trim(item), v))
      fail(ErrorCode::parse, "invalid value '" + item + "' in '" + text + "'");
    out.push_back(v);
  }
  if (out.empty())
    fail(ErrorCode::parse, "empty grid");
  return out;
}

std::string format_real(double v, int precision)
{
  if (std::isnan(v))
    return "NA";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content)
{
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      fail(ErrorCode::parse, "cannot write '" + tmp + "'");
    out << content;
    if (!out)
      fail(ErrorCode::parse, "write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string ci_csv_header()
{
  return "method,u,estimate,lower,upper,level,bandwidth,std_width";
}

std::string ci_csv_row(const QuantileCI& ci, int precision)
{
  return ci.method + "," + format_real(ci.u, precision) + "," +
         format_real(ci.estimate, precision) + "," +
         format_real(ci.lower, precision) + "," +
         format_real(ci.upper, precision) + "," +
         format_real(ci.level, precision) + "," +
         opt_real(ci.bandwidth_used, precision) + "," +
         format_real(ci.standardized_width, precision);
}

std::string two_sample_csv_header()
{
  return "method,u,p,estimate,lower,upper,level,n,m";
}

std::string two_sample_csv_row(const TwoSampleCI& ci, int precision)
{
  return ci.method + "," + format_real(ci.u, precision) + "," +
         format_real(ci.p, precision) + "," +
         format_real(ci.estimate, precision) + "," +
         format_real(ci.lower, precision) + "," +
         format_real(ci.upper, precision) + "," +
         format_real(ci.level, precision) + "," + std::to_string(ci.n) + "," +
         std::to_string(ci.m);
}

std::string coverage_csv(const CoverageReport& report,
                         bool two_sample,
                         int precision)
{
  std::string out = "method,u,coverage,mc_error,mean_std_width,failures";
  if (two_sample)
    out += ",p";
  out += "\n";
  for (const auto& c : report.cells) {
    out += c.method + "," + format_real(c.u, precision) + "," +
           format_real(c.coverage, precision) + "," +
           format_real(c.mc_error, precision) + "," +
           format_real(c.mean_std_width, precision) + "," +
           std::to_string(c.failures);
    if (two_sample)
      out += "," + format_real(c.p, precision);
    out += "\n";
  }
  return out;
}

std::string mse_csv(const MseReport& report, int precision)
{
  std::string out = "method,n,u,q_true,mean,bias,variance,mse,failures\n";
  for (const auto& c : report.cells)
    out += c.method + "," + std::to_string(c.n) + "," +
           format_real(c.u, precision) + "," +
           format_real(c.q_true, precision) + "," +
           format_real(c.mean, precision) + "," +
           format_real(c.bias, precision) + "," +
           format_real(c.variance, precision) + "," +
           format_real(c.mse, precision) + "," + std::to_string(c.failures) +
           "\n";
  return out;
}

std::string gld_bias_csv(const GldBiasReport& report, int precision)
{
  std::string out =
    "n,u,true_quantile,mean_fitted,percent_difference,absolute,failures\n";
  for (const auto& c : report.cells)
    out += std::to_string(c.n) + "," + format_real(c.u, precision) + "," +
           format_real(c.true_quantile, precision) + "," +
           format_real(c.mean_fitted, precision) + "," +
           format_real(c.percent_difference, precision) + "," +
           (c.absolute ? "1" : "0") + "," + std::to_string(c.failures) + "\n";
  return out;
}

} // namespace qci
