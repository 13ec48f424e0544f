#pragma once

#include <string>
#include <vector>

#include "streampca/stream_model.hpp"

namespace streampca {

// Text stream files. Line 1 is `#streampca-v1 d=<d> n=<n> split=<0|1>`,
// followed by n comma-separated rows: d values for x, and when split=1 a
// further d values for q and d for v. Values are written in the shortest
// form that parses back bit-exactly.

// Writes split=1 when every record carries a known split, split=0 otherwise.
void save_stream(const std::string& path, const std::vector<StreamRecord>& records);

// Rows from a split=0 file come back with q = x, v = 0, split_known = false.
// Malformed content raises ParseError with the offending line number; file
// access failures raise IoError.
std::vector<StreamRecord> load_stream(const std::string& path);

}  // namespace streampca
