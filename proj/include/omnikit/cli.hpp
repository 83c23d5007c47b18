#pragma once

namespace omnikit::cli {

// exit codes: 0 success, 2 usage error, 3 runtime failure
int run(int argc, char** argv);

}  // namespace omnikit::cli
