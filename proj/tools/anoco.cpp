#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "cli/commands.hpp"

namespace {

constexpr int kInputError = 2;
constexpr int kInternalError = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_st("anoco");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("ANOCO_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Anchor-consistent graph anomaly scoring over patch-feature files"};
  anoco::cli::RunConfig config;
  anoco::cli::add_options(app, config);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: InvalidArgument: " << e.what() << '\n';
    return kInputError;
  }
  try {
    anoco::cli::finalize(config);
    anoco::cli::run(config);
  } catch (const anoco::Error& e) {
    std::cerr << "error: " << anoco::to_string(e.code()) << ": " << e.what() << '\n';
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: IoFailure: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return kInternalError;
  }
  return 0;
}
