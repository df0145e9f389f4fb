#ifndef PLCMAC_CSV_HPP
#define PLCMAC_CSV_HPP

#include <cstdio>
#include <string>

namespace plcmac {

/// Deterministic shortest-ish decimal rendering for CSV cells.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace plcmac

#endif
