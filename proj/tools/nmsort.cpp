#include "nmsort/cli.hpp"

int main(int argc, char** argv) { return nmsort::cli::dispatch(argc, argv); }
