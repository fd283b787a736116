#include "webcolor/cli.hpp"

int main(int argc, char** argv) { return webcolor::run_cli(argc, argv); }
