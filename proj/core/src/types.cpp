#include "rsreg/types.hpp"

namespace rsreg {

WeightVector::WeightVector(Vector values) : values_(std::move(values)) {
  if (!in_box(values_)) {
    throw InvalidParameter("weight vector entries must lie in [0, 1/n]");
  }
}

WeightVector WeightVector::uniform(Index n) {
  if (n <= 0) throw InvalidParameter("uniform weights need n >= 1");
  WeightVector w;
  w.values_ = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return w;
}

bool WeightVector::in_box(const Vector& values, double slack) {
  const Index n = values.size();
  if (n == 0) return true;
  const double cap = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const double w = values[i];
    if (!(w >= 0.0) || w > cap * (1.0 + slack)) return false;
  }
  return true;
}

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::basic_sdp_t1:
      return "basic_sdp_t1";
    case BackendKind::lite_quartic_t2:
      return "lite_quartic_t2";
    case BackendKind::full_sos:
      return "full_sos";
  }
  return "unknown";
}

BackendKind backend_from_string(const std::string& name) {
  if (name == "basic_sdp_t1" || name == "basic") return BackendKind::basic_sdp_t1;
  if (name == "lite_quartic_t2" || name == "lite") return BackendKind::lite_quartic_t2;
  if (name == "full_sos" || name == "full") return BackendKind::full_sos;
  throw InvalidParameter("unknown relaxation backend: " + name);
}

}  // namespace rsreg
