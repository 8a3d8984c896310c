#pragma once

#include <string>

#include "pme/grid.hpp"

namespace pme {

// Snapshot format: one JSON header line {"dim":d,"n":n,"kind":"..."} with a
// trailing newline, then n^d little-endian float64 cell values in row-major
// order (axis 0 slowest).
void write_field(const GridField& f, const std::string& path);
GridField read_field(const std::string& path);

}  // namespace pme
