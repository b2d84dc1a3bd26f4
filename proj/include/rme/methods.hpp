#pragma once

#include "rme/config.hpp"
#include "rme/metrics.hpp"
#include "rme/unrolled.hpp"

#include <memory>
#include <string>

namespace rme {

// Reconstruction methods by name: halrtc, admm, rbf, ldpl, unroll. The
// unroll method needs a model.
NamedMethod make_method(const std::string& name, const Config& cfg,
                        std::shared_ptr<const UnrolledModel> model = nullptr);

bool is_method_name(const std::string& name);

} // namespace rme
