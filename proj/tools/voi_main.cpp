#include "voi/cli.hpp"

int main(int argc, char** argv) {
    return voi::cli::run_main(argc, argv);
}
