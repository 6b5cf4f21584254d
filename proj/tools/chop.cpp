// SPDX-License-Identifier: Apache-2.0
#include "chop/cli/cli.hpp"

int main(int argc, char** argv)
{
    return chop::cli::run_main(argc, argv);
}
