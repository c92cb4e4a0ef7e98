#pragma once

#include "taskqp/standard_qp.hpp"

#include <iosfwd>
#include <string>

namespace taskqp {

// Plain-text dump of (P, a, A, b, G, h). Each block is a header line
// "<name> <rows> <cols>" followed by `rows` lines of row-major entries
// formatted with %.17g, so values round-trip exactly.

void write_qp_dump(std::ostream& out, const StandardQP& qp);
void write_qp_dump(const std::string& path, const StandardQP& qp);

/// Throws InvalidArgument on malformed input.
StandardQP read_qp_dump(std::istream& in);
StandardQP read_qp_dump_file(const std::string& path);

}  // namespace taskqp
