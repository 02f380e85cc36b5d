#include "ccnn/cli.hpp"

int main(int argc, char** argv) { return ccnn::cli::run(argc, argv); }
