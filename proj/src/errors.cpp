#include "rtree/errors.hpp"

namespace rtree {

FormatError::FormatError(const std::string& what, std::size_t row)
    : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}

}  // namespace rtree
