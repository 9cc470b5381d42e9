#include "cli.h"

int main(int argc, char** argv) { return gctr::cli::cli_main(argc, argv); }
