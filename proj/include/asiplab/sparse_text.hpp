#pragma once

#include "asiplab/types.hpp"

#include <string>
#include <vector>

namespace asiplab {

// Text dataset format, one record per line:
//   LABEL idx:val idx:val ...
// LABEL is -1/+1 (0/1 are accepted and mapped to -1/+1); indices are
// 1-based in the file and 0-based in memory. The dataset dimension is
// the largest index seen. Malformed lines raise ParseError with the
// line number; a file with no records is an argument error.
std::vector<Record> load_sparse_text(const std::string& path);

// Inverse of load_sparse_text; values are written with 17 significant
// digits so a reload reproduces them exactly.
void save_sparse_text(const std::string& path,
                      const std::vector<Record>& records);

}  // namespace asiplab
