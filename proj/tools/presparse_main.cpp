#include "presparse/harness.hpp"

int main(int argc, char** argv) { return presparse::cli_dispatch(argc, argv); }
