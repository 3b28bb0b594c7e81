#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tminimax::cli {

// argv without the program name. Returns 0 on success, 2 on usage errors and
// 1 when a computation or file operation fails. Results go to `out` unless
// --out names a file; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

}  // namespace tminimax::cli
