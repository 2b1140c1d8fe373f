#include "cli_main.hpp"

int main(int argc, char** argv) { return rbrom::cli_main(argc, argv); }
