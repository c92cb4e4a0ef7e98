#include "taskqp/qp_dump.hpp"

#include "taskqp/errors.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace taskqp {

namespace {

void write_block(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buffer[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", m(i, j));
      if (j > 0) out << ' ';
      out << buffer;
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_block(std::istream& in, const std::string& expected) {
  std::string name;
  Eigen::Index rows = -1;
  Eigen::Index cols = -1;
  if (!(in >> name >> rows >> cols) || name != expected || rows < 0 || cols < 0) {
    throw InvalidArgument("QP dump: expected block header '" + expected + " <rows> <cols>'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string token;
      if (!(in >> token)) throw InvalidArgument("QP dump: truncated block '" + expected + "'");
      try {
        std::size_t used = 0;
        m(i, j) = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw InvalidArgument("QP dump: bad number '" + token + "' in block '" + expected + "'");
      }
    }
  }
  return m;
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& expected) {
  const Eigen::MatrixXd m = read_block(in, expected);
  if (m.cols() != 1) throw InvalidArgument("QP dump: block '" + expected + "' must have one column");
  return m.col(0);
}

}  // namespace

void write_qp_dump(std::ostream& out, const StandardQP& qp) {
  write_block(out, "P", qp.P);
  write_block(out, "a", qp.a);
  write_block(out, "A", qp.A);
  write_block(out, "b", qp.b);
  write_block(out, "G", qp.G);
  write_block(out, "h", qp.h);
}

void write_qp_dump(const std::string& path, const StandardQP& qp) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  write_qp_dump(out, qp);
}

StandardQP read_qp_dump(std::istream& in) {
  StandardQP qp;
  qp.P = read_block(in, "P");
  qp.a = read_vector(in, "a");
  qp.A = read_block(in, "A");
  qp.b = read_vector(in, "b");
  qp.G = read_block(in, "G");
  qp.h = read_vector(in, "h");
  qp.validate();
  return qp;
}

StandardQP read_qp_dump_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open QP dump '" + path + "'");
  return read_qp_dump(in);
}

}  // namespace taskqp
