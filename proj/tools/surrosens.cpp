#include <iostream>
#include <string>
#include <vector>

#include "surrosens/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return surrosens::run_cli(args, std::cout, std::cerr);
}
