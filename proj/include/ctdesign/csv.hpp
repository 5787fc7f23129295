#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace ctdesign::csv {

//! Quote a field when it contains a comma, quote, or line break; embedded
//! quotes are doubled.
std::string escape(const std::string& field);

//! Shortest decimal string that round-trips to the same double, '.' as the
//! decimal separator regardless of locale.
std::string number(double v);
std::string number(int v);
std::string number(std::uint64_t v);

//! One record, comma separated, CRLF terminated.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace ctdesign::csv
