// Writes a small synthetic cohort for the CLI tests: make_cohort <dir> <users>
#include <cstdlib>
#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_cohort <dir> <users>\n";
    return 2;
  }
  respire::testing::CohortSpec spec;
  spec.users = std::atoi(argv[2]);
  std::cout << respire::testing::write_cohort(argv[1], spec).string() << "\n";
  return 0;
}
