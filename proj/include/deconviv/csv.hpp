#pragma once
#include <string>

#include "deconviv/sample.hpp"

namespace deconviv {

// Reads a sample whose header is exactly `y,x,w1,w2` (CRLF tolerated).
// Throws MissingColumn for a wrong header, MalformedCsv for a bad row, and
// EmptySample when fewer than two data rows remain.
Sample read_sample_csv(const std::string& path);

// Writes the sample back in the same four-column layout.
void write_sample_csv(const std::string& path, const Sample&);

// Round-trip-safe numeric formatting (17 significant digits, %.17g).
std::string format_g17(double v);

} // namespace deconviv
