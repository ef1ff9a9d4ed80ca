#include <csignal>
#include <iostream>

#include "commands.hpp"

namespace {
extern "C" void on_signal(int) { taxelmap::cli::stop_flag() = true; }
}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return taxelmap::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
