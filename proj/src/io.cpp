#include "permcca/io.hpp"

#include "permcca/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace permcca {

namespace {

std::ifstream open_input(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return in;
}

void strip_cr(std::string& line)
{
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

// Locale-independent; NaN and infinities are rejected by the caller.
bool parse_number(std::string_view field, double& out)
{
  if (!field.empty() && field.front() == '+')
    field.remove_prefix(1);
  if (field.empty())
    return false;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

bool blank(const std::string& line)
{
  return line.find_first_not_of(" \t") == std::string::npos;
}

} // namespace

Mat parse_matrix_csv(std::istream& in, const std::string& source)
{
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line))
      continue;
    const auto fields = split(line);
    if (first) {
      first = false;
      double probe = 0.0;
      // Header: no field of the first row is numeric.
      bool header = true;
      for (const auto f : fields)
        if (parse_number(f, probe))
          header = false;
      if (header) {
        cols = fields.size();
        continue;
      }
    }
    if (cols == 0)
      cols = fields.size();
    if (fields.size() != cols)
      throw Error(ErrorCode::RaggedRows, source + ": line " + std::to_string(line_no) + " has " +
                                             std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(cols));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_number(fields[c], v) || !std::isfinite(v))
        throw Error(ErrorCode::ParseError, source + ": line " + std::to_string(line_no) + ", column " +
                                               std::to_string(c + 1) + ": not a finite number: '" +
                                               std::string(fields[c]) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * cols + j];
  return m;
}

Mat read_matrix_csv(const std::string& path)
{
  std::ifstream in = open_input(path);
  return parse_matrix_csv(in, path);
}

void write_matrix_csv(std::ostream& out, const Mat& m)
{
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j)
        out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Mat& m)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_matrix_csv(out, m);
}

namespace {

std::vector<long long> read_integers(const std::string& path)
{
  std::ifstream in = open_input(path);
  std::vector<long long> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const std::string_view field = trim(line);
    if (field.empty())
      continue;
    long long v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
      throw Error(ErrorCode::ParseError, path + ": line " + std::to_string(line_no) + ", column 1: not an integer: '" +
                                             std::string(field) + "'");
    out.push_back(v);
  }
  return out;
}

} // namespace

std::vector<int> read_labels(const std::string& path)
{
  std::vector<int> out;
  for (long long v : read_integers(path))
    out.push_back(static_cast<int>(v));
  return out;
}

SelectionPlan read_selection(const std::string& path, Index n)
{
  SelectionPlan plan;
  plan.n = n;
  for (long long v : read_integers(path))
    plan.keep.push_back(static_cast<Index>(v));
  plan.validate();
  return plan;
}

} // namespace permcca
