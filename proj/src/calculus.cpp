#include "gasketlab/calculus.hpp"

namespace gasketlab {

int cell_side_pow(const TriCell& cell) {
  Rational s2 = cell.side2();
  int sp = 0;
  while (s2 > 1) {
    s2 /= 4;
    ++sp;
  }
  while (s2 < 1) {
    s2 *= 4;
    --sp;
  }
  if (s2 != 1) throw std::invalid_argument("cell_side_pow: side is not a power of 2");
  return sp;
}

}  // namespace gasketlab
