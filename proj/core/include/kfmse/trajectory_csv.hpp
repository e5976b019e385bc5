#pragma once

#include <iosfwd>
#include <string>

#include "kfmse/models.hpp"

namespace kfmse {

/// Formats a double with 17 significant digits, enough for an exact
/// text round trip.
std::string format_double(double v);

/// Reads a trajectory from CSV with header `k,x1,...,xn`. The first column
/// is the integer step index and must run 0 .. K without gaps or
/// duplicates. Throws ParseError or NonContiguousIndex.
Trajectory load_trajectory_csv(const std::string& path);
Trajectory read_trajectory_csv(std::istream& in);

/// Writes the matching CSV; floats carry 17 significant digits so a
/// write-then-read round trip is bit exact.
void save_trajectory_csv(const Trajectory& t, const std::string& path);
void write_trajectory_csv(const Trajectory& t, std::ostream& out);

}  // namespace kfmse
