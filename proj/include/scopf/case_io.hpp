#pragma once

#include <stdexcept>
#include <string>

#include "scopf/grid.hpp"

namespace scopf {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses a UTF-8 JSON case document. Powers in the file are MW/MVAr on the
// system base; the returned Grid is per-unit and fully validated. Unknown
// keys are rejected with the offending path.
Grid parse_case(const std::string& bytes);

// Inverse of parse_case: emits the case document (MW/MVAr units) with
// deterministic key order. parse(serialize(parse(x))) == parse(x).
std::string serialize_case(const Grid& per_unit_grid);

Grid load_case_file(const std::string& path);

}  // namespace scopf
