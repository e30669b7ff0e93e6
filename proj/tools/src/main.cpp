#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biot_iga/errors.hpp"
#include "commands.hpp"
#include "run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Four-field isogeometric Biot solver and verification harness", "biot-iga"};
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("config", config_path, "flat key=value configuration file")->required();
  app.add_option("overrides", overrides, "key=value overrides applied after the file");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::ifstream in(config_path);
    if (!in) throw biot::ConfigError("cannot read config file '" + config_path + "'");
    std::stringstream text;
    text << in.rdbuf();
    const biot::cli::RunConfig config = biot::cli::parse_config(text.str(), overrides);

    biot::cli::RunSummary summary;
    if (config.output == "-") {
      summary = biot::cli::run(config, std::cout);
    } else {
      std::ofstream out(config.output, std::ios::binary);
      if (!out) throw biot::ConfigError("cannot open output '" + config.output + "'");
      summary = biot::cli::run(config, out);
      if (!out) throw biot::Error("write to '" + config.output + "' failed");
    }
    std::fprintf(stderr, "biot-iga: %s done, wall time %.2f s, peak dofs %d\n",
                 biot::cli::to_string(config.command).c_str(), summary.wall_seconds,
                 summary.peak_dofs);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "biot-iga: error: %s\n", e.what());
    return biot::cli::exit_code_for(e);
  }
}
