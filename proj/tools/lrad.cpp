#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "lrad/harness.hpp"
#include "lrad/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"learning-rate-adaptive SGD/Adam experiments"};
  app.require_subcommand(1);

  std::string descriptor_path;
  std::string out_override;
  int seeds_override = 0;
  bool literal_adam = false;
  CLI::App* run = app.add_subcommand("run", "run an experiment described by a JSON descriptor");
  run->add_option("descriptor", descriptor_path, "path to the descriptor JSON")->required();
  run->add_option("--out", out_override, "override the descriptor's output directory");
  run->add_option("--seeds", seeds_override, "override the number of seeds");
  run->add_flag("--literal-adam", literal_adam,
                "use the pseudocode-literal Adam (in-place bias correction, shared trial moments)");

  std::string verify_out;
  CLI::App* verify = app.add_subcommand("verify", "run the built-in theory checks");
  verify->add_option("--out", verify_out, "also write checks.csv to this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      lrad::ExperimentDescriptor d = lrad::parse_descriptor(descriptor_path);
      if (!out_override.empty()) d.output_dir = out_override;
      if (seeds_override > 0) d.seeds = seeds_override;
      if (literal_adam) d.trainer.adam.mode = lrad::AdamMode::literal;
      return lrad::run_experiment(d);
    }
    // verify: theory checks with built-in defaults
    const lrad::TheoryChecksConfig cfg;
    const auto results = lrad::run_theory_checks(cfg);
    bool all_pass = true;
    for (const auto& r : results) {
      std::printf("%-22s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
      if (!r.pass) all_pass = false;
    }
    if (!verify_out.empty()) {
      std::filesystem::create_directories(verify_out);
      std::ofstream os(std::filesystem::path(verify_out) / "checks.csv");
      os << "check,pass,detail\n";
      for (const auto& r : results)
        os << r.name << ',' << (r.pass ? "1" : "0") << ",\"" << r.detail << "\"\n";
    }
    return all_pass ? 0 : 1;
  } catch (const lrad::DescriptorError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
