#ifndef OLSBPI_CSV_HPP
#define OLSBPI_CSV_HPP

#include <string>

namespace olsbpi {

// 17 significant digits: enough for exact double round-trip, so emitted
// files compare byte for byte across identical runs.
std::string format_double17(double v);

}  // namespace olsbpi

#endif
