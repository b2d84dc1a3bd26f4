#include "rme/methods.hpp"

#include "rme/admm.hpp"
#include "rme/error.hpp"
#include "rme/radio.hpp"

namespace rme {

bool is_method_name(const std::string& name) {
  return name == "halrtc" || name == "admm" || name == "rbf" || name == "ldpl" || name == "unroll";
}

NamedMethod make_method(const std::string& name, const Config& cfg,
                        std::shared_ptr<const UnrolledModel> model) {
  if (name == "halrtc") {
    const HalrtcParams p = cfg.halrtc;
    return {name, [p](const Tensor3& d, const ObservationMask& m) { return solve_halrtc(d, m, p).x; }};
  }
  if (name == "admm") {
    const AdmmHyperParams hp = cfg.admm;
    return {name, [hp](const Tensor3& d, const ObservationMask& m) { return solve_admm(d, m, hp).estimate(); }};
  }
  if (name == "rbf") {
    const RbfOptions o = cfg.rbf;
    return {name, [o](const Tensor3& d, const ObservationMask& m) { return rbf_interpolate(d, m, o).map; }};
  }
  if (name == "ldpl") {
    // Scenes are normalized maps, not dB.
    LdplFitOptions o;
    o.db_domain = false;
    return {name, [o](const Tensor3& d, const ObservationMask& m) { return ldpl_interpolate(d, m, o).map; }};
  }
  if (name == "unroll") {
    if (!model) throw_invalid("method unroll needs a model");
    return {name, [model](const Tensor3& d, const ObservationMask& m) { return infer(*model, d, m); }};
  }
  throw_invalid("unknown method '" + name + "' (expected halrtc, admm, rbf, ldpl or unroll)");
}

} // namespace rme
