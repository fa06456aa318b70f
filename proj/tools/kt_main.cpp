#include <iostream>
#include <string>
#include <vector>

#include "kt_cli.hpp"

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    return kt::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
