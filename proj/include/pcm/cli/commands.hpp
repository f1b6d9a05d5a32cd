#ifndef PCM_CLI_COMMANDS_HPP_
#define PCM_CLI_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcm/dataset.hpp"

namespace pcm::cli {

// Runs one `pcmask` invocation. `args` excludes the program name. Returns
// the process exit status; failures print one line to `err`:
//   pcmask: error[CODE]: message
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

std::string tool_version();

// Training stages in execution order; valid values for --stop-after.
const std::vector<std::string>& train_stages();

// scaler.json written by `train` and read by `evaluate`/`attribute`.
void save_scaler_json(const std::filesystem::path& path, const ScalerStats& stats);
ScalerStats load_scaler_json(const std::filesystem::path& path);

}  // namespace pcm::cli

#endif  // PCM_CLI_COMMANDS_HPP_
