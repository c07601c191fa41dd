#include "rsplit/errors.hpp"

namespace rsplit {

NumericalDivergence::NumericalDivergence(std::size_t cycle, const std::string& detail)
    : Error("non-finite state at cycle " + std::to_string(cycle) + ": " + detail), cycle_(cycle) {}

}  // namespace rsplit
