#include "hetlab/cli.hpp"

int main(int argc, char** argv) { return hetlab::cli::dispatch(argc, argv); }
