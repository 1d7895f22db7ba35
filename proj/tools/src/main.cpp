#include <iostream>

#include "qcgain/cli/app.hpp"

int main(int argc, char** argv) { return qcgain::cli::run(argc, argv, std::cout, std::cerr); }
