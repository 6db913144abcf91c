#include <nystrom/cli.hpp>

int main(int argc, char** argv) { return nystrom::cli_main(argc, argv); }
