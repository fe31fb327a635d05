#pragma once

#include "malab/geometry.hpp"
#include "malab/grid.hpp"

#include <iosfwd>
#include <string>

namespace malab {

// Text formats, all numbers printed with 17 significant digits:
//
//   malab-field v1            malab-domain v1
//   nx ny                     vertices m
//   spacing ox oy             x y            (m lines)
//   v v v ... (ny rows)       nx ny
//                             spacing ox oy
//                             0/1 mask rows (ny rows)

std::string format_real(Real v);

void write_field(std::ostream& out, const ScalarField& field);
/// Throws ParseError on a bad header, short data or trailing garbage.
ScalarField read_field(std::istream& in);

void write_domain(std::ostream& out, const ConvexDomain& domain);
ConvexDomain read_domain(std::istream& in);

void save_field(const std::string& path, const ScalarField& field);
ScalarField load_field(const std::string& path);

}  // namespace malab
