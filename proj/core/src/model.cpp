#include "rsplit/model.hpp"

namespace rsplit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

ModelKind kind(const ModelSpec& spec) noexcept {
  return std::holds_alternative<lorenz96::LorenzSpec>(spec) ? ModelKind::lorenz96 : ModelKind::euler2d;
}

std::size_t dimension(const ModelSpec& spec) noexcept {
  return std::visit(overloaded{[](const lorenz96::LorenzSpec& s) { return s.n; },
                               [](const euler2d::EulerSpec& s) { return s.dimension(); }},
                    spec);
}

bool is_conservative(const ModelSpec& spec) noexcept {
  return std::visit([](const auto& s) { return s.conservative; }, spec);
}

void validate(const ModelSpec& spec) {
  std::visit([](const auto& s) { s.validate(); }, spec);
}

SplittingScheme build_scheme(const ModelSpec& spec, const TimeLawSpec& law, OrderPolicy order) {
  return std::visit(overloaded{[&](const lorenz96::LorenzSpec& s) { return lorenz96::build_scheme(s, law, order); },
                               [&](const euler2d::EulerSpec& s) { return euler2d::build_scheme(s, law, order); }},
                    spec);
}

VectorField rhs_field(const ModelSpec& spec) {
  return std::visit(overloaded{[](const lorenz96::LorenzSpec& s) { return lorenz96::rhs_field(s); },
                               [](const euler2d::EulerSpec& s) { return euler2d::rhs_field(s); }},
                    spec);
}

}  // namespace rsplit
