#include "pflow/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pflow/errors.hpp"

namespace pflow {

void RigModel::validate() const {
  if (!(focal_px > 0.0)) throw std::invalid_argument("rig: focal_px must be > 0");
  if (!(baseline_m > 0.0)) throw std::invalid_argument("rig: baseline_m must be > 0");
  if (width <= 0 || height <= 0) throw std::invalid_argument("rig: width and height must be positive");
  if (!(d_min >= 0.0)) throw std::invalid_argument("rig: d_min must be >= 0");
  if (!(d_max > d_min)) throw std::invalid_argument("rig: d_max must exceed d_min");
  if (downsample_factor < 1) throw std::invalid_argument("rig: downsample_factor must be >= 1");
  if (width % downsample_factor != 0 || height % downsample_factor != 0) {
    throw std::invalid_argument("rig: downsample_factor " + std::to_string(downsample_factor) +
                                " must divide " + std::to_string(width) + "x" + std::to_string(height));
  }
}

void RigModel::write_to(io::KeyValueFile& kv) const {
  kv.add("focal_px", io::format_double(focal_px));
  kv.add("baseline_m", io::format_double(baseline_m));
  kv.add("width", std::to_string(width));
  kv.add("height", std::to_string(height));
  kv.add("d_min", io::format_double(d_min));
  kv.add("d_max", io::format_double(d_max));
  kv.add("downsample_factor", std::to_string(downsample_factor));
}

RigModel RigModel::read_from(const io::KeyValueFile& kv) {
  RigModel rig;
  rig.focal_px = kv.get_double("focal_px");
  rig.baseline_m = kv.get_double("baseline_m");
  rig.width = static_cast<int>(kv.get_int_or("width", 640));
  rig.height = static_cast<int>(kv.get_int_or("height", 480));
  rig.d_min = kv.get_double_or("d_min", 30.0);
  rig.d_max = kv.get_double_or("d_max", 180.0);
  rig.downsample_factor = static_cast<int>(kv.get_int_or("downsample_factor", 8));
  try {
    rig.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return rig;
}

double disparity_to_depth(double d, const RigModel& rig) {
  if (!(d > 0.0)) throw DomainError("disparity must be > 0 (got " + std::to_string(d) + ")");
  return rig.fb() / d;
}

double depth_to_disparity(double z, const RigModel& rig) {
  if (!(z > 0.0)) throw DomainError("depth must be > 0 (got " + std::to_string(z) + ")");
  return rig.fb() / z;
}

}  // namespace pflow
