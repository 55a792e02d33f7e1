#include <iostream>
#include <string>
#include <vector>

#include "walktrace/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return walktrace::run_cli(args, std::cout, std::cerr);
}
