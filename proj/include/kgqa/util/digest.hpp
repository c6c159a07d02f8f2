#pragma once

#include <string>
#include <string_view>

namespace kgqa::util {

/// Lowercase hex SHA-256 of `data`.
std::string sha256Hex(std::string_view data);

}  // namespace kgqa::util
