#include "momsurv/errors.hpp"

namespace momsurv {

void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace momsurv
