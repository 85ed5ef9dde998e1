#include <iostream>

#include "commands.hpp"
#include "msl/spin_models.hpp"

int main(int argc, char** argv) {
  using namespace msl::cli;
  GlobalOptions global;
  global.argv.assign(argv, argv + argc);

  CLI::App app{"Learning Ising models from metastable samples"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads (falls back to MSL_THREADS)");
  app.add_flag("--force", global.force, "Overwrite existing output files");
  app.add_option("-o,--output", global.output, "Output path, - for stdout")->capture_default_str();

  add_model_commands(app, global);
  add_sample_commands(app, global);
  add_metastability_commands(app, global);
  add_cw_commands(app, global);
  add_learn_commands(app, global);
  add_verify_command(app, global);
  add_experiment_command(app, global);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
