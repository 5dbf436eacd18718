#include <iostream>
#include <string>
#include <vector>

#include "netprice/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return netprice::cli::run(args, std::cout, std::cerr);
}
