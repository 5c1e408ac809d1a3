#include <iostream>
#include <string>
#include <vector>

#include "flexfem/tutorials.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flexfem::tutorials::cli_main(args, std::cout, std::cerr);
}
