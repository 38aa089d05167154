#include <iostream>

#include "cadgl/cli/cli.hpp"

int main(int argc, char** argv) {
  return cadgl::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
