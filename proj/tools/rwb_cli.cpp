#include "rwb/cli.hpp"

int main(int argc, char** argv) { return rwb::cli::main(argc, argv); }
