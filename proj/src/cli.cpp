#include <sstream>

#include "CLI11.hpp"
#include "flexfem/params.hpp"

namespace flexfem::params {

namespace {

struct CliApp {
  CLI::App app;
  CliOptions opts;
  std::string generate_level;
  CLI::Option *generate = nullptr;

  explicit CliApp(const std::string &program)
      : app("flexfem: finite-element tutorials driven by parameter files",
            program) {
    app.set_help_flag("-h,--help", "Print this help message and exit");
    generate = app.add_option("-g,--generate-params", generate_level,
                              "Write the default parameter file at the given "
                              "verbosity (standard when omitted) and exit")
                   ->expected(0, 1)
                   ->check(CLI::IsMember({"minimal", "standard", "full"}));
    app.add_option("-f,--params-file", opts.params_file,
                   "Parameter file (.prm or .json)");
    app.add_option("-o,--output-directory", opts.output_dir,
                   "Output directory")
        ->capture_default_str();
    app.add_option("args", opts.app_args, "Application arguments");
    app.allow_extras(false);
  }
};

}  // namespace

CliOptions parse_cli(const std::vector<std::string> &args) {
  CliApp cli("flexfem");
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli.app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    cli.opts.help = true;
    return cli.opts;
  } catch (const CLI::ParseError &e) {
    throw ParamError(std::string(e.what()) + "\n\n" + cli_usage("flexfem"));
  }
  if (cli.generate->count() > 0)
    cli.opts.generate = cli.generate_level.empty()
                            ? Verbosity::Standard
                            : verbosity_from_string(cli.generate_level);
  return cli.opts;
}

std::string cli_usage(const std::string &program) {
  CliApp cli(program);
  return cli.app.help();
}

}  // namespace flexfem::params
