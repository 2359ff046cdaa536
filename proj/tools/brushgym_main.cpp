#include "brushgym/cli.hpp"

int main(int argc, char** argv) { return brushgym::cli_main(argc, argv); }
