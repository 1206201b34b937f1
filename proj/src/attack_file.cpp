#include "msqss/attack_file.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

namespace msqss {

namespace {

struct DataLine {
  int number;
  std::string text;
};

// All meaningful lines of the file: comments stripped, blanks dropped.
std::vector<DataLine> read_data_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AttackFileError(path + ": cannot open");
  std::vector<DataLine> lines;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::string text = raw.substr(0, raw.find('#'));
    std::istringstream probe(text);
    std::string token;
    if (!(probe >> token)) continue;  // nothing but whitespace
    lines.push_back({number, std::move(text)});
  }
  return lines;
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw AttackFileError(path + ":" + std::to_string(line) + ": " + what);
}

// One matrix block: dim*dim entry lines, each cell exactly once.
UnitaryMatrix parse_matrix(const std::string& path, const std::vector<DataLine>& lines,
                           std::size_t* cursor, int dim, const char* name) {
  std::vector<Complex> entries(static_cast<std::size_t>(dim) * dim, Complex(0.0, 0.0));
  std::vector<bool> seen(static_cast<std::size_t>(dim) * dim, false);
  for (int count = 0; count < dim * dim; ++count) {
    if (*cursor >= lines.size()) {
      throw AttackFileError(path + ": unexpected end of file inside the " + name +
                            " matrix (entry " + std::to_string(count + 1) + " of " +
                            std::to_string(dim * dim) + ")");
    }
    const DataLine& line = lines[(*cursor)++];
    std::istringstream iss(line.text);
    int row;
    int col;
    double re;
    double im;
    std::string extra;
    if (!(iss >> row >> col >> re >> im)) {
      fail(path, line.number, std::string("expected `row col re im` for the ") + name +
                                  " matrix, got \"" + line.text + "\"");
    }
    if (iss >> extra) fail(path, line.number, "trailing token \"" + extra + "\"");
    if (row < 0 || row >= dim || col < 0 || col >= dim) {
      fail(path, line.number, "entry (" + std::to_string(row) + ", " + std::to_string(col) +
                                  ") outside a " + std::to_string(dim) + "x" +
                                  std::to_string(dim) + " matrix");
    }
    std::size_t idx = static_cast<std::size_t>(row) * dim + col;
    if (seen[idx]) {
      fail(path, line.number,
           std::string(name) + " entry (" + std::to_string(row) + ", " + std::to_string(col) +
               ") given twice");
    }
    seen[idx] = true;
    entries[idx] = Complex(re, im);
  }
  int worst_i = 0;
  int worst_j = 0;
  double defect = UnitaryMatrix::gram_defect(dim, entries, &worst_i, &worst_j);
  if (defect > kUnitaryTolerance) {
    throw AttackFileError(path + ": " + name + " matrix is not unitary, Gram defect " +
                          std::to_string(defect) + " at columns (" + std::to_string(worst_i) +
                          ", " + std::to_string(worst_j) + ")");
  }
  return UnitaryMatrix(dim, std::move(entries));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

AttackModel load_attack_file(const std::string& path) {
  std::vector<DataLine> lines = read_data_lines(path);
  if (lines.empty()) throw AttackFileError(path + ": empty file");

  std::size_t cursor = 0;
  const DataLine& header = lines[cursor++];
  int d;
  int p;
  {
    std::istringstream iss(header.text);
    std::string extra;
    if (!(iss >> d >> p)) fail(path, header.number, "expected header `d p`");
    if (iss >> extra) fail(path, header.number, "trailing token \"" + extra + "\"");
  }
  if (d < 2) fail(path, header.number, "particle dimension " + std::to_string(d) + " below 2");
  if (p < 1) fail(path, header.number, "probe dimension " + std::to_string(p) + " below 1");

  const int dim = d * p;
  UnitaryMatrix u_forward = parse_matrix(path, lines, &cursor, dim, "forward");
  UnitaryMatrix u_backward = parse_matrix(path, lines, &cursor, dim, "backward");

  std::vector<Complex> probe;
  probe.reserve(static_cast<std::size_t>(p));
  for (int e = 0; e < p; ++e) {
    if (cursor >= lines.size()) {
      throw AttackFileError(path + ": unexpected end of file inside the probe state (entry " +
                            std::to_string(e + 1) + " of " + std::to_string(p) + ")");
    }
    const DataLine& line = lines[cursor++];
    std::istringstream iss(line.text);
    double re;
    double im;
    std::string extra;
    if (!(iss >> re >> im)) {
      fail(path, line.number, "expected `re im` for the probe state, got \"" + line.text + "\"");
    }
    if (iss >> extra) fail(path, line.number, "trailing token \"" + extra + "\"");
    probe.emplace_back(re, im);
  }
  if (cursor != lines.size()) {
    fail(path, lines[cursor].number, "trailing data after the probe state");
  }

  double norm = vector_norm(probe);
  if (std::abs(norm - 1.0) > kNormTolerance) {
    throw AttackFileError(path + ": probe state norm is " + std::to_string(norm) +
                          ", expected 1");
  }

  try {
    return AttackModel::entangle_measure(
        EntangleMeasureAttack{p, std::move(u_forward), std::move(u_backward), std::move(probe)});
  } catch (const std::invalid_argument& err) {
    throw AttackFileError(path + ": " + err.what());
  }
}

void save_attack_file(const std::string& path, const AttackModel& model) {
  if (model.kind != AttackKind::EntangleMeasure || !model.em.has_value()) {
    throw std::invalid_argument("only entangle-measure attacks have a file form");
  }
  const EntangleMeasureAttack& attack = *model.em;
  attack.validate();
  const int d = attack.particle_dim();
  const int p = attack.probe_dim;
  const int dim = d * p;

  std::ofstream out(path);
  if (!out) throw AttackFileError(path + ": cannot write");
  out << "# entangle-measure attack, joint space " << d << "x" << p << "\n";
  out << d << " " << p << "\n";
  out << "# forward unitary\n";
  for (int row = 0; row < dim; ++row) {
    for (int col = 0; col < dim; ++col) {
      const Complex& v = attack.u_forward.at(row, col);
      out << row << " " << col << " " << format_double(v.real()) << " "
          << format_double(v.imag()) << "\n";
    }
  }
  out << "# backward unitary\n";
  for (int row = 0; row < dim; ++row) {
    for (int col = 0; col < dim; ++col) {
      const Complex& v = attack.u_backward.at(row, col);
      out << row << " " << col << " " << format_double(v.real()) << " "
          << format_double(v.imag()) << "\n";
    }
  }
  out << "# probe state\n";
  for (int e = 0; e < p; ++e) {
    const Complex& v = attack.probe_init[static_cast<std::size_t>(e)];
    out << format_double(v.real()) << " " << format_double(v.imag()) << "\n";
  }
  if (!out) throw AttackFileError(path + ": write failed");
}

}  // namespace msqss
