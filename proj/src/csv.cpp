#include "olsbpi/csv.hpp"

#include <cstdio>

namespace olsbpi {

std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace olsbpi
