#include <iostream>
#include <string>
#include <vector>

#include "adjorder/cli.hpp"

int main(int argc, char** argv) {
  return adjorder::cli_dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
