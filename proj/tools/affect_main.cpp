#include <iostream>
#include <string>
#include <vector>

#include "affect/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return affect::cli::run(args, std::cout, std::cerr);
}
