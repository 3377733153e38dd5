#pragma once

#include <string>
#include <vector>

#include "creditlift/types.hpp"

namespace creditlift {

// CSV round-trip for the portfolio schema. Errors name the offending row and
// column. An empty data section loads as an empty collection.
std::vector<CustomerRecord> load_portfolio(const std::string& path);
void write_portfolio(const std::vector<CustomerRecord>& records, const std::string& path);

}  // namespace creditlift
