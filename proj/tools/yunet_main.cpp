#include "yunet/cli.hpp"

int main(int argc, char** argv) { return yunet::run_cli(argc, argv); }
