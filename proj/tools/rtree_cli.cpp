#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rtree/config.hpp"
#include "rtree/errors.hpp"
#include "rtree/runner.hpp"
#include "rtree/verify.hpp"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kBadInput = 3, kParameter = 4 };

int fail(int code, const char* kind, const std::string& message) {
  std::string flat = message;
  for (char& ch : flat) {
    if (ch == '\n' || ch == '"') ch = ' ';
  }
  std::fprintf(stderr, "rtree: error code=%d kind=%s message=\"%s\"\n", code, kind, flat.c_str());
  return code;
}

const std::map<std::string, std::string> kHelp = {
    {"seq", "sequence spec: power:A | poisson:B | logpow:L | const:C | spiked | file:PATH | list:V,..."},
    {"seed", "master seed"},
    {"out", "output path (build: tree edge list)"},
    {"format", "csv or json"},
    {"n", "number of branches (height and twopoint accept inf)"},
    {"reps", "replicates"},
    {"lambda", "MGF parameter"},
    {"tolerance", "truncation budget for n = inf"},
    {"K", "two-point truncation level (default n)"},
    {"rgrid", "radii v1,v2,... or lo:hi:steps"},
    {"source", "twopoint: law|tree, martingale: urn|tree"},
    {"ngrid", "n values v1,v2,... or lo:hi:steps"},
    {"epsgrid", "eps values v1,v2,... or lo:hi:steps"},
    {"samples", "mu_n sample size for the eps-nets"},
    {"i0", "start index"},
    {"m0", "initial mass fraction"},
    {"checkpoints", "recorded steps v1,v2,..."},
    {"m", "intermediate step"},
    {"n0", "base tree index"},
    {"parts", "pieces of the base tree"},
    {"import", "read the tree from an edge-list CSV instead of building it"},
    {"stats", "path for the build statistics"},
    {"metric", "max_height | longest_stem | good_length"},
    {"alpha", "exponent for good-branch statistics"},
    {"eps", "slack for good-branch statistics"},
};

const std::map<rtree::Command, std::string> kCommandHelp = {
    {rtree::Command::gen, "print a_1..a_n and series diagnostics"},
    {rtree::Command::build, "build (or import) a tree, export it and report its statistics"},
    {rtree::Command::height, "sample the height of a uniform point; exact mean and MGF"},
    {rtree::Command::twopoint, "distance between two uniform points: samples, mean, small-ball tail"},
    {rtree::Command::dimension, "eps-net counts and the box-counting slope"},
    {rtree::Command::martingale, "mass fraction of a region along the growth, urn or tree"},
    {rtree::Command::lp, "projected total variation between the uniform measures at m and n"},
    {rtree::Command::probe, "growth curves of max height, longest stem or good-branch length"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random real trees built by uniform gluing of branches"};
  app.require_subcommand(1);

  struct Sub {
    rtree::Command command;
    CLI::App* app;
    std::map<std::string, std::string> flags;
    std::string config;
  };
  std::vector<Sub> subs;
  subs.reserve(8);
  for (auto command : {rtree::Command::gen, rtree::Command::build, rtree::Command::height, rtree::Command::twopoint,
                       rtree::Command::dimension, rtree::Command::martingale, rtree::Command::lp,
                       rtree::Command::probe}) {
    subs.push_back({command, nullptr, {}, {}});
  }
  for (auto& sub : subs) {
    sub.app = app.add_subcommand(std::string(rtree::command_name(sub.command)), kCommandHelp.at(sub.command));
    sub.app->add_option("--config", sub.config, "key=value or JSON config file; flags override it");
    for (const auto& key : rtree::allowed_keys(sub.command)) {
      sub.app->add_option_function<std::string>(
          "--" + key, [&sub, key](const std::string& v) { sub.flags[key] = v; }, kHelp.at(key));
    }
  }
  std::string suite;
  auto* verify = app.add_subcommand("verify", "run an acceptance suite: exact | montecarlo | dimension");
  verify->add_option("suite", suite)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (verify->parsed()) {
      const auto report = rtree::run_suite(suite);
      rtree::print_report(report, std::cout);
      return kOk;
    }
    for (auto& sub : subs) {
      if (!sub.app->parsed()) continue;
      rtree::Settings settings;
      if (!sub.config.empty()) settings = rtree::read_settings_file(sub.config);
      for (const auto& [key, value] : sub.flags) settings[key] = value;
      const auto config = rtree::ExperimentConfig::from_settings(sub.command, settings);
      rtree::run(config, std::cout);
    }
    return kOk;
  } catch (const rtree::UsageError& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const rtree::SpecError& e) {
    return fail(kUsage, "spec", e.what());
  } catch (const rtree::FormatError& e) {
    return fail(kBadInput, "format", e.what());
  } catch (const rtree::IoError& e) {
    return fail(kBadInput, "io", e.what());
  } catch (const rtree::ParameterError& e) {
    return fail(kParameter, "parameter", e.what());
  } catch (const rtree::TruncationError& e) {
    return fail(kParameter, "truncation", e.what());
  } catch (const rtree::LocationError& e) {
    return fail(kParameter, "location", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what());
  }
}
