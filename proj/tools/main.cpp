#include <iostream>

#include "editdiff/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return editdiff::run_cli(args, std::cout, std::cerr);
}
