#include "cli.hpp"

int main(int argc, char** argv) { return crackforge::cli::run(argc, argv); }
