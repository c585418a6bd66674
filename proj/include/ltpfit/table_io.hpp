#pragma once

// Delimited-text matrices and atomic file output.
//
// Layout: rows are categories (counts) or covariates, columns are samples.
// The delimiter is a tab if the first non-blank line contains one, otherwise
// a comma. An optional header row holds sample names and an optional leading
// label column holds row names; both are detected from non-numeric cells.

#include <string>
#include <vector>

#include "ltpfit/mln_obs.hpp"

namespace ltpfit {

struct LabeledMatrix {
  MatrixXd values;
  std::vector<std::string> rowNames;  // empty if the file had no label column
  std::vector<std::string> colNames;  // empty if the file had no header row
};

/// Parse delimited text. `source` names the input in error messages.
/// Malformed cells raise ParseError with 1-based line and column.
LabeledMatrix parseTable(const std::string& text, const std::string& source = "<text>");
LabeledMatrix readTable(const std::string& path);

/// Counts with labels; negative or fractional cells raise DomainError.
struct LabeledCounts {
  CountMatrix counts;
  std::vector<std::string> rowNames;
  std::vector<std::string> colNames;
};
LabeledCounts readCounts(const std::string& path);

CountMatrix loadCounts(const std::string& path);
MatrixXd loadCovariates(const std::string& path);

/// Comma-delimited with %.17g reals, so a write/read round trip is exact.
/// Names are written as a header row / label column when present.
std::string formatTable(const LabeledMatrix& table);
void writeTable(const std::string& path, const LabeledMatrix& table);

/// Quote a cell for comma-delimited output if it contains a comma, quote or
/// line break.
std::string csvCell(const std::string& s);

/// printf("%.17g").
std::string formatReal(double v);

/// Write to a sibling temporary file, then rename over `path`.
void writeFileAtomic(const std::string& path, const std::string& contents);

std::string readFile(const std::string& path);

}  // namespace ltpfit
