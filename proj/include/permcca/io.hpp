#pragma once

#include "permcca/linalg.hpp"
#include "permcca/permute.hpp"
#include "permcca/residualize.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace permcca {

// Comma-separated numbers, LF or CRLF line endings. A first row containing a
// non-numeric field is taken as a header and skipped. Blank lines are ignored.
// Throws ParseError (with line and column) for bad or non-finite fields and
// RaggedRows for rows of unequal length.
Mat parse_matrix_csv(std::istream& in, const std::string& source = "<stream>");
Mat read_matrix_csv(const std::string& path);

// Values printed with 17 significant digits so that reading back is exact.
void write_matrix_csv(std::ostream& out, const Mat& m);
void write_matrix_csv(const std::string& path, const Mat& m);

// One integer label per line.
std::vector<int> read_labels(const std::string& path);
// One 0-based retained observation index per line.
SelectionPlan read_selection(const std::string& path, Index n);

} // namespace permcca
