#include "kacflow/cli.hpp"

int main(int argc, char** argv) { return kacflow::cli::parse_and_dispatch(argc, argv); }
