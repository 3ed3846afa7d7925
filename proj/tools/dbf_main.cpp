#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbf/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Chiral Maxwell solver on the periodic box"};
  app.require_subcommand(1);

  std::string file, out_dir, param, out_file;
  bool echo = false;
  std::vector<double> values;
  int K = 1;

  auto* run = app.add_subcommand("run", "solve a scenario and write history.csv + diagnostics.json");
  run->add_option("file", file, "scenario JSON")->required();
  run->add_option("-o,--out", out_dir, "output directory")->required();
  run->add_flag("--echo-config", echo, "print the parsed scenario as canonical JSON");

  auto* verify = app.add_subcommand("verify", "run the invariant checks and print a table");
  verify->add_option("file", file, "scenario JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "repeat a run over one parameter");
  sweep->add_option("file", file, "scenario JSON")->required();
  sweep->add_option("--param", param, "eta | nu | dt")->required();
  sweep->add_option("--values", values, "parameter values")->expected(0, -1);
  sweep->add_option("-o,--out", out_dir, "output directory")->default_val("sweep_out");

  auto* basis = app.add_subcommand("basis", "write the curl eigenbasis table");
  basis->add_option("--K", K, "truncation |k|_inf <= K")->required();
  basis->add_option("-o,--out", out_file, "output JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return dbf::cmd_run(file, out_dir, echo, std::cout, std::cerr);
  if (*verify) return dbf::cmd_verify(file, std::cout, std::cerr);
  if (*sweep) return dbf::cmd_sweep(file, param, values, out_dir, std::cout, std::cerr);
  if (*basis) return dbf::cmd_basis(K, out_file, std::cerr);
  return 1;
}
