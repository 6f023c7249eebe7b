#include "vesicle/cli_io.hpp"

int main(int argc, char** argv) { return vesicle::cli_main(argc, argv); }
