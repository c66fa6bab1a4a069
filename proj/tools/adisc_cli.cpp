#include "adisc/harness.hpp"

int main(int argc, char** argv) { return adisc::cli_dispatch(argc, argv); }
