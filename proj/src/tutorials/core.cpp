#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "flexfem/tutorials.hpp"

namespace flexfem::tutorials {

using namespace params;

// ---------------------------------------------------------------------------
// AppContext

namespace {
AppContext *live_context = nullptr;
}

AppContext::AppContext(CliOptions cli)
    : cli_(std::move(cli)), start_(std::chrono::system_clock::now()) {
  if (live_context) throw Error("an AppContext is already alive");
  live_context = this;
}

AppContext::~AppContext() { live_context = nullptr; }

bool AppContext::exists() { return live_context != nullptr; }

AppContext &AppContext::instance() {
  if (!live_context) throw Error("no AppContext has been constructed");
  return *live_context;
}

// ---------------------------------------------------------------------------
// CoreModel

CoreModel::CoreModel(std::string subsection_path)
    : prm_subsection_path(std::move(subsection_path)),
      output_dir_(AppContext::exists() ? AppContext::instance().output_dir() : std::string()) {}

std::string CoreModel::sub(const std::string &name) const {
  return prm_subsection_path + " / " + name;
}

Path CoreModel::path(const std::string &name) const {
  return split_path(name.empty() ? prm_subsection_path : sub(name));
}

std::string CoreModel::output_file(const std::string &file) const {
  std::filesystem::create_directories(output_dir_);
  return (std::filesystem::path(output_dir_) / file).string();
}

ParamTree configure(CoreModel &model, const std::vector<Setting> &settings) {
  ParamTree tree;
  model.declare_parameters(tree);
  Overlay overlay;
  for (const auto &s : settings) overlay.push_back({split_path(s.path), s.name, s.value});
  tree.apply(overlay);
  model.parse_parameters(tree);
  return tree;
}

// ---------------------------------------------------------------------------
// Parameter groups

mesh::Mesh MeshSettings::build() const {
  const Point lo{lower, lower, lower}, up{upper, upper, upper};
  return mesh::generate_box(dim, lo, up, {subdivisions, subdivisions, subdivisions});
}

MeshHandler::MeshHandler(std::string subsection_path, MeshSettings defaults)
    : path_(std::move(subsection_path)), settings_(std::move(defaults)) {
  if (settings_.degree_names.size() != settings_.degrees.size())
    throw Error("mesh settings: one default degree per degree entry");
}

void MeshHandler::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(path_);
  params.declare_entry("Element type", "Hex", Selection{{"Hex"}},
                       "Cell shape; structured boxes use hexahedra.");
  params.set_verbosity(Verbosity::Minimal);
  params.declare_entry("Number of subdivisions", std::to_string(settings_.subdivisions),
                       Integer{1, 4096}, "Cells per axis.");
  for (std::size_t k = 0; k < settings_.degrees.size(); ++k)
    params.declare_entry(settings_.degree_names[k], std::to_string(settings_.degrees[k]),
                         Integer{1, 2}, "Lagrange degree.");
  params.reset_verbosity();
  params.declare_entry("Dimension", std::to_string(settings_.dim), Integer{1, 3});
  params.declare_entry("Lower bound", format_real(settings_.lower), Real{},
                       "Every axis spans [lower, upper].");
  params.declare_entry("Upper bound", format_real(settings_.upper), Real{});
  params.leave_subsection_path();
}

void MeshHandler::parse_parameters(const ParamTree &params) {
  const auto base = split_path(path_);
  settings_.dim = std::stoi(params.get(base, "Dimension"));
  settings_.subdivisions = std::stoi(params.get(base, "Number of subdivisions"));
  settings_.lower = std::stod(params.get(base, "Lower bound"));
  settings_.upper = std::stod(params.get(base, "Upper bound"));
  for (std::size_t k = 0; k < settings_.degrees.size(); ++k)
    settings_.degrees[k] = std::stoi(params.get(base, settings_.degree_names[k]));
  if (!(settings_.upper > settings_.lower))
    throw ParamError("mesh: upper bound must exceed lower bound");
}

OutputHandler::OutputHandler(std::string subsection_path, OutputSettings defaults,
                             bool with_checkpoints)
    : path_(std::move(subsection_path)), settings_(defaults), checkpoints_(with_checkpoints) {}

void OutputHandler::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(path_);
  params.declare_entry("Enable output", settings_.enabled ? "true" : "false", Bool{},
                       "Write VTK and CSV files to the output directory.");
  params.declare_entry("VTK output period", std::to_string(settings_.vtk_period),
                       Integer{0, INT32_MAX}, "Every n time steps; 0 writes only the final state.");
  if (checkpoints_)
    params.declare_entry("Checkpoint period", std::to_string(settings_.checkpoint_period),
                         Integer{0, INT32_MAX}, "Every n time steps; 0 disables checkpoints.");
  params.leave_subsection_path();
}

void OutputHandler::parse_parameters(const ParamTree &params) {
  const auto base = split_path(path_);
  settings_.enabled = params.get(base, "Enable output") == "true";
  settings_.vtk_period = std::stoi(params.get(base, "VTK output period"));
  if (checkpoints_) settings_.checkpoint_period = std::stoi(params.get(base, "Checkpoint period"));
}

LinearSolve::LinearSolve(const std::string &base, linalg::SolverConfig s,
                         linalg::PreconditionerConfig p)
    : solver(base + " / Linear solver", s), preconditioner(base + " / Preconditioner", p) {}

void LinearSolve::declare_parameters(ParamTree &params) const {
  solver.declare_parameters(params);
  preconditioner.declare_parameters(params);
}

void LinearSolve::parse_parameters(const ParamTree &params) {
  solver.parse_parameters(params);
  preconditioner.parse_parameters(params);
}

linalg::SolveReport LinearSolve::operator()(const linalg::CsrMatrix &A, std::span<const double> b,
                                            std::span<double> x, double tolerance) const {
  auto cfg = solver.config();
  if (tolerance > 0.0) cfg.tolerance = tolerance;
  const auto M = preconditioner.build(A);
  auto rep = linalg::solve(A, b, x, cfg, *M);
  if (!rep.converged) throw Error("linear solver failed: " + rep.reason);
  return rep;
}

// ---------------------------------------------------------------------------
// mesh-info

MeshInfoApp::MeshInfoApp(std::string subsection_path)
    : CoreModel(std::move(subsection_path)),
      mesh_(sub("Mesh and space discretization"), MeshSettings{3, 4, 0.0, 1.0, {}, {}}) {}

void MeshInfoApp::declare_parameters(ParamTree &params) const {
  mesh_.declare_parameters(params);
}

void MeshInfoApp::parse_parameters(const ParamTree &params) { mesh_.parse_parameters(params); }

void MeshInfoApp::run() {
  const auto m = mesh_.settings().build();
  info_ = mesh::mesh_info(m);
  std::ostringstream os;
  os << std::setprecision(12);
  os << "dimension        " << m.dim() << "\n"
     << "cells            " << m.n_cells() << "\n"
     << "vertices         " << m.n_vertices() << "\n"
     << "volume           " << info_.volume << "\n"
     << "boundary measure " << info_.total_surface() << "\n";
  for (const auto &[tag, area] : info_.surface_area_by_tag)
    os << "  tag " << tag << "          " << area << "\n";
  os << "cell diameter    min " << info_.cell_diameter.min << " max " << info_.cell_diameter.max
     << " mean " << info_.cell_diameter.mean << "\n";
  summary_ = os.str();
}

// ---------------------------------------------------------------------------
// Registry and command line

std::vector<std::string> app_names() {
  return {"tutorial01", "tutorial02", "tutorial03",   "tutorial04", "tutorial04_ad",
          "tutorial05", "tutorial06", "tutorial07",   "transmission", "mesh-info"};
}

std::unique_ptr<CoreModel> make_app(const std::string &name) {
  if (name == "tutorial01") return std::make_unique<Poisson>();
  if (name == "tutorial02") return std::make_unique<NonlinearElliptic>();
  if (name == "tutorial03") return std::make_unique<Heat>();
  if (name == "tutorial04") return std::make_unique<NonlinearParabolic>();
  if (name == "tutorial04_ad")
    return std::make_unique<NonlinearParabolic>("Nonlinear parabolic", JacobianMode::AutoDiff);
  if (name == "tutorial05")
    return std::make_unique<ParabolicSystem>("Parabolic system", CouplingScheme::Monolithic);
  if (name == "tutorial06")
    return std::make_unique<ParabolicSystem>("Parabolic system", CouplingScheme::Partitioned);
  if (name == "tutorial07") return std::make_unique<CahnHilliard>();
  if (name == "transmission") return std::make_unique<Transmission>();
  if (name == "mesh-info") return std::make_unique<MeshInfoApp>();
  throw Error("unknown application '" + name + "'");
}

namespace {
std::string usage() {
  std::string s = "usage: flexfem <app> [-g [minimal|full]] [-f file.prm|file.json] [-o dir]\n"
                  "apps:";
  for (const auto &n : app_names()) s += " " + n;
  return s + "\n";
}
}  // namespace

int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CliOptions cli;
  try {
    cli = parse_cli(args);
  } catch (const std::exception &e) {
    err << e.what() << "\n";
    return 2;
  }
  if (cli.help) {
    out << usage() << "\n" << cli_usage("flexfem");
    return 0;
  }
  if (cli.app_args.size() != 1) {
    err << (cli.app_args.empty() ? "no application given" : "more than one application given")
        << "\n" << usage();
    return 2;
  }
  const std::string name = cli.app_args.front();
  const auto names = app_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    err << "unknown application '" << name << "'\n" << usage();
    return 2;
  }

  try {
    AppContext context(cli);
    // Models are created after, and destroyed before, the context.
    auto model = make_app(name);
    ParamTree params;
    model->declare_parameters(params);
    if (cli.generate) {
      const std::string file = cli.params_file.empty() ? name + ".prm" : cli.params_file;
      params.write_file(file, *cli.generate);
      out << "wrote " << file << " (" << to_string(*cli.generate) << ")\n";
      return 0;
    }
    if (!cli.params_file.empty()) params.parse_file(cli.params_file);
    model->parse_parameters(params);
    model->run();
    if (auto *info = dynamic_cast<MeshInfoApp *>(model.get())) out << info->summary();
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace flexfem::tutorials
