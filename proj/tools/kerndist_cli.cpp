#include "kerndist/cli.hpp"

int main(int argc, char** argv) { return kerndist::cli_main(argc, argv); }
