#pragma once

#include <variant>

#include "rsplit/euler2d.hpp"
#include "rsplit/lorenz96.hpp"
#include "rsplit/splitting.hpp"

namespace rsplit {

using ModelSpec = std::variant<lorenz96::LorenzSpec, euler2d::EulerSpec>;

ModelKind kind(const ModelSpec& spec) noexcept;
std::size_t dimension(const ModelSpec& spec) noexcept;
bool is_conservative(const ModelSpec& spec) noexcept;
void validate(const ModelSpec& spec);

SplittingScheme build_scheme(const ModelSpec& spec, const TimeLawSpec& law = {},
                             OrderPolicy order = OrderPolicy::fixed);
VectorField rhs_field(const ModelSpec& spec);

}  // namespace rsplit
