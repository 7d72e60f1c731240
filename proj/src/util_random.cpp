#include "gems/util/random.hpp"

#include <sstream>

namespace gems {

std::string serialize_rng(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng deserialize_rng(const std::string& text) {
  std::istringstream in(text);
  Rng rng;
  in >> rng;
  if (!in) throw std::invalid_argument("malformed RNG state");
  return rng;
}

}  // namespace gems
