#include "pg2net/cli/app.hpp"

int main(int argc, char** argv) { return pg2net::cli::dispatch(argc, argv); }
