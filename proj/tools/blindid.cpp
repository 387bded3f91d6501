#include "blindid/cli.hpp"

int main(int argc, char** argv) { return blindid::cli::main(argc, argv); }
