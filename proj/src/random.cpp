#include "skillmaster/random.hpp"

#include <sstream>

namespace skillmaster {

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
}

}  // namespace skillmaster
