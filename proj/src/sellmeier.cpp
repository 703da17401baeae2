#include "bsv/sellmeier.hpp"

#include <cmath>
#include <stdexcept>

namespace bsv {

std::string axis_name(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  throw std::logic_error("bad axis enum");
}

Axis axis_from_name(const std::string& name) {
  if (name == "x") return Axis::x;
  if (name == "y") return Axis::y;
  if (name == "z") return Axis::z;
  throw std::invalid_argument("unknown crystal axis '" + name + "' (expected x, y or z)");
}

double SellmeierSet::index(double lambda_um) const {
  if (!(lambda_um >= lambda_min_um && lambda_um <= lambda_max_um))
    throw std::domain_error("wavelength " + std::to_string(lambda_um) +
                            " um outside Sellmeier validity range [" +
                            std::to_string(lambda_min_um) + ", " + std::to_string(lambda_max_um) + "] um");
  const double l2 = lambda_um * lambda_um;
  const double n2 = A + B / (l2 - C) + D / (l2 - E);
  if (!(n2 > 1.0)) throw std::domain_error("Sellmeier evaluation produced non-physical n^2");
  return std::sqrt(n2);
}

namespace {
constexpr SellmeierSet ktp_x{3.29100, 0.04140, 0.03978, 9.35522, 31.45571, 0.43, 3.54};
constexpr SellmeierSet ktp_y{3.45018, 0.04341, 0.04597, 16.98825, 39.43799, 0.43, 3.54};
constexpr SellmeierSet ktp_z{4.59423, 0.06206, 0.04763, 110.80672, 86.12171, 0.43, 3.54};
}  // namespace

const SellmeierSet& ktp_sellmeier(Axis axis) {
  switch (axis) {
    case Axis::x: return ktp_x;
    case Axis::y: return ktp_y;
    case Axis::z: return ktp_z;
  }
  throw std::logic_error("bad axis enum");
}

SellmeierTable SellmeierTable::ktp() { return SellmeierTable{{ktp_x, ktp_y, ktp_z}}; }

double refractive_index(const SellmeierTable& table, Axis axis, double lambda_m) {
  return table.for_axis(axis).index(lambda_m * 1e6);
}

}  // namespace bsv
