#include <iostream>

#include "levelset/cli.hpp"

int main(int argc, char** argv) { return levelset::cli::dispatch(argc, argv, std::cout, std::cerr); }
