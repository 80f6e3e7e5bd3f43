#pragma once

#include <string>

namespace yunet {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfig = 2,   // bad flags, bad config file, invalid values
    kExitData = 3,     // missing/undecodable dataset, shape problems, non-binary masks
    kExitNumeric = 4,  // divergence, non-finite gradients
    kExitIo = 5,       // unwritable outputs, missing/corrupt/mismatched checkpoints
};

/// Environment variable holding the default output root.
inline constexpr const char* kOutputRootEnv = "YUNET_OUT";

int run_cli(int argc, char** argv);

} // namespace yunet
