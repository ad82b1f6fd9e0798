#pragma once

#include <iosfwd>

namespace mpgo {

// exit codes: 0 all enabled checks pass, 1 numeric failure, 2 bad configuration or unwritable output
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mpgo
