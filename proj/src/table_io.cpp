#include "ltpfit/table_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ltpfit/error.hpp"

namespace ltpfit {

namespace {

struct Line {
  std::size_t number;  // 1-based line in the source
  std::vector<std::string> cells;
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> splitCells(const std::string& line, char delim, std::size_t lineNo,
                                    const std::string& source) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  bool wasQuoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && trim(cur).empty()) {
      quoted = true;
      wasQuoted = true;
      cur.clear();
    } else if (c == delim) {
      cells.push_back(wasQuoted ? cur : trim(cur));
      cur.clear();
      wasQuoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw ParseError(source + ": unterminated quote on line " + std::to_string(lineNo), lineNo,
                     cells.size() + 1);
  cells.push_back(wasQuoted ? cur : trim(cur));
  return cells;
}

bool parseReal(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) return false;
  return std::isfinite(out);
}

}  // namespace

std::string formatReal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csvCell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

LabeledMatrix parseTable(const std::string& text, const std::string& source) {
  std::vector<Line> lines;
  {
    std::istringstream in(text);
    std::string raw;
    std::size_t number = 0;
    char delim = 0;
    while (std::getline(in, raw)) {
      ++number;
      if (trim(raw).empty()) continue;
      if (!delim) delim = raw.find('\t') != std::string::npos ? '\t' : ',';
      lines.push_back({number, splitCells(raw, delim, number, source)});
    }
  }
  if (lines.empty()) throw ParseError(source + ": no data", 0, 0);

  double scratch = 0.0;
  const auto numeric = [&](const std::string& c) { return parseReal(c, scratch); };

  // Header row: any non-numeric cell past the first column (or in the only column).
  bool header = false;
  {
    const auto& first = lines.front().cells;
    for (std::size_t c = first.size() > 1 ? 1 : 0; c < first.size(); ++c)
      if (!numeric(first[c])) header = true;
  }
  const std::size_t dataStart = header ? 1 : 0;
  if (lines.size() <= dataStart) throw ParseError(source + ": header row but no data rows", 0, 0);
  const bool labels = !numeric(lines[dataStart].cells.front());
  const std::size_t width = lines[dataStart].cells.size();
  const std::size_t ncol = width - (labels ? 1 : 0);
  if (ncol == 0)
    throw ParseError(source + ": no numeric columns", lines[dataStart].number, 1);

  LabeledMatrix out;
  out.values.resize(static_cast<Index>(lines.size() - dataStart), static_cast<Index>(ncol));
  for (std::size_t r = dataStart; r < lines.size(); ++r) {
    const Line& line = lines[r];
    if (line.cells.size() != width)
      throw ParseError(source + ": line " + std::to_string(line.number) + " has " +
                           std::to_string(line.cells.size()) + " cells, expected " +
                           std::to_string(width),
                       line.number, std::min(line.cells.size(), width) + 1);
    if (labels) out.rowNames.push_back(line.cells.front());
    for (std::size_t c = 0; c < ncol; ++c) {
      const std::size_t col = c + (labels ? 1 : 0);
      double v = 0.0;
      if (!parseReal(line.cells[col], v))
        throw ParseError(source + ": malformed cell '" + line.cells[col] + "' at line " +
                             std::to_string(line.number) + ", column " + std::to_string(col + 1),
                         line.number, col + 1);
      out.values(static_cast<Index>(r - dataStart), static_cast<Index>(c)) = v;
    }
  }
  if (header) {
    const auto& h = lines.front().cells;
    if (h.size() == ncol) {
      out.colNames = h;
    } else if (labels && h.size() == width) {
      out.colNames.assign(h.begin() + 1, h.end());
    } else {
      throw ParseError(source + ": header has " + std::to_string(h.size()) +
                           " cells for " + std::to_string(ncol) + " data columns",
                       lines.front().number, 1);
    }
  }
  return out;
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("io: cannot open '" + path + "'", 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabeledMatrix readTable(const std::string& path) { return parseTable(readFile(path), path); }

LabeledCounts readCounts(const std::string& path) {
  LabeledMatrix t = readTable(path);
  return {CountMatrix(std::move(t.values)), std::move(t.rowNames), std::move(t.colNames)};
}

CountMatrix loadCounts(const std::string& path) { return readCounts(path).counts; }

MatrixXd loadCovariates(const std::string& path) { return readTable(path).values; }

std::string formatTable(const LabeledMatrix& table) {
  const MatrixXd& v = table.values;
  const bool labels = !table.rowNames.empty();
  if (labels && static_cast<Index>(table.rowNames.size()) != v.rows())
    throw ParameterError("io: row name count does not match the matrix");
  if (!table.colNames.empty() && static_cast<Index>(table.colNames.size()) != v.cols())
    throw ParameterError("io: column name count does not match the matrix");
  std::string out;
  if (!table.colNames.empty()) {
    if (labels) out += "name,";
    for (std::size_t c = 0; c < table.colNames.size(); ++c) {
      if (c) out += ',';
      out += csvCell(table.colNames[c]);
    }
    out += '\n';
  }
  for (Index i = 0; i < v.rows(); ++i) {
    if (labels) out += csvCell(table.rowNames[static_cast<std::size_t>(i)]) + ",";
    for (Index j = 0; j < v.cols(); ++j) {
      if (j) out += ',';
      out += formatReal(v(i, j));
    }
    out += '\n';
  }
  return out;
}

void writeTable(const std::string& path, const LabeledMatrix& table) {
  writeFileAtomic(path, formatTable(table));
}

void writeFileAtomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("io: cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw ParameterError("io: write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ParameterError("io: cannot rename into '" + path + "'");
  }
}

}  // namespace ltpfit
