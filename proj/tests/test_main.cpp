#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "aaa/solver.hpp"

int main(int argc, char** argv) {
  aaa::solver::ensure_reliable_blas(argv);
  doctest::Context context(argc, argv);
  return context.run();
}
