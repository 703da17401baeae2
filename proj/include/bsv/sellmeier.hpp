#pragma once

#include <array>
#include <string>

namespace bsv {

enum class Axis { x, y, z };

std::string axis_name(Axis a);
Axis axis_from_name(const std::string& name);

// n^2 = A + B/(lambda^2 - C) + D/(lambda^2 - E), lambda in micrometers.
struct SellmeierSet {
  double A, B, C, D, E;
  double lambda_min_um, lambda_max_um;

  double index(double lambda_um) const;
};

// Flux-grown KTP fits (two-pole form above), transparency window 0.43-3.54 um.
const SellmeierSet& ktp_sellmeier(Axis axis);

struct SellmeierTable {
  std::array<SellmeierSet, 3> sets;  // indexed by Axis

  const SellmeierSet& for_axis(Axis a) const { return sets[static_cast<int>(a)]; }
  static SellmeierTable ktp();
};

// lambda in meters; throws std::domain_error outside the validity range.
double refractive_index(const SellmeierTable& table, Axis axis, double lambda_m);

}  // namespace bsv
