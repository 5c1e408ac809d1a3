#include "support.hpp"

namespace flexfem::tutorials {

using namespace params;

// -lap u = 1 on (0, L) x (0, 1), u = 0 on the outer boundary, split at
// x = interface into a Dirichlet (left) and a Neumann (right) subdomain.

Transmission::Transmission(std::string subsection_path)
    : CoreModel(std::move(subsection_path)), coupling_(sub("Coupling")), output_(sub("Output")) {}

void Transmission::declare_parameters(ParamTree &params) const {
  params.enter_subsection_path(prm_subsection_path);
  params.enter_subsection("Problem");
  params.declare_entry("Domain length", format_real(length_), Real{0.0, 1e300});
  params.declare_entry("Interface position", format_real(interface_), Real{0.0, 1e300},
                       "x coordinate of the interface; must fall on a mesh line.");
  params.set_verbosity(Verbosity::Minimal);
  params.declare_entry("Cells per unit length", std::to_string(n_per_unit_), Integer{1, 4096});
  params.declare_entry("FE space degree", std::to_string(degree_), Integer{1, 2});
  params.reset_verbosity();
  params.leave_subsection();
  params.leave_subsection_path();
  coupling_.declare_parameters(params);
  output_.declare_parameters(params);
}

void Transmission::parse_parameters(const ParamTree &params) {
  const auto p = path("Problem");
  length_ = std::stod(params.get(p, "Domain length"));
  interface_ = std::stod(params.get(p, "Interface position"));
  n_per_unit_ = std::stoi(params.get(p, "Cells per unit length"));
  degree_ = std::stoi(params.get(p, "FE space degree"));
  if (!(interface_ > 0.0 && interface_ < length_))
    throw ParamError("interface position must lie inside the domain");
  coupling_.parse_parameters(params);
  output_.parse_parameters(params);
}

void Transmission::run() {
  const auto one = [](const Point &) { return 1.0; };
  const auto zero = [](const Point &) { return 0.0; };
  const int n_total = static_cast<int>(std::lround(length_ * n_per_unit_));
  const int nl = static_cast<int>(std::lround(interface_ * n_per_unit_));
  if (std::abs(nl - interface_ * n_per_unit_) > 1e-9 || nl <= 0 || nl >= n_total)
    throw Error("transmission: the interface must coincide with a mesh line");
  const auto box = [&](double a, double b, int nx) {
    return mesh::generate_box(2, {a, 0.0, 0.0}, {b, 1.0, 0.0}, {nx, n_per_unit_, 1});
  };
  const coupling::PoissonSubdomain left(box(0.0, interface_, nl), degree_, one, {0, 2, 3}, zero);
  const coupling::PoissonSubdomain right(box(interface_, length_, n_total - nl), degree_, one,
                                         {1, 2, 3}, zero);
  const auto map = coupling::build_interface_map(left.space(), 1, right.space(), 0);

  trace_.assign(map.size(), 0.0);
  report_ = coupling::dirichlet_neumann_iterate(
      coupling::make_poisson_dn_problem(left, right, map, coupling::Side::First), trace_,
      coupling_.options());

  // Reconstruct both subdomain solutions from the converged trace.
  const auto ul = left.solve(coupling::apply_interface_dirichlet(map, coupling::Side::First, trace_));
  const auto flux = left.residual(ul);
  DVector lambda = coupling::extract_interface_data(map, coupling::Side::First, flux);
  for (double &v : lambda) v = -v;
  const auto ur = right.solve({}, coupling::scatter_interface_data(map, coupling::Side::Second,
                                                                   lambda, right.space().n_dofs()));

  const coupling::PoissonSubdomain mono(box(0.0, length_, n_total), degree_, one, {0, 1, 2, 3},
                                        zero);
  const auto u = mono.solve();
  mono_error_ = 0.0;
  for (const auto *side : {&left, &right}) {
    const auto &us = side == &left ? ul : ur;
    for (std::size_t d = 0; d < side->space().n_dofs(); ++d) {
      const auto c = fem::find_closest_dof(mono.space(), side->space().dof_point(d));
      mono_error_ = std::max(mono_error_, std::abs(us[d] - u[c.index]));
    }
  }

  if (writes_output() && output_.settings().enabled) {
    io::CsvTable table{{"iteration", "update_norm"}, {}};
    for (std::size_t k = 0; k < report_.update_norms.size(); ++k)
      table.add_row(std::vector<double>{double(k + 1), report_.update_norms[k]});
    io::csv_write(output_file("norms.csv"), table);
    io::vtk_write(output_file("solution_0.vtk"), mono.space().mesh(), degree_,
                  {{"u", &mono.space(), u}}, 0.0);
    io::vtk_write(output_file("solution_left_0.vtk"), left.space().mesh(), degree_,
                  {{"u", &left.space(), ul}}, 0.0);
    io::vtk_write(output_file("solution_right_0.vtk"), right.space().mesh(), degree_,
                  {{"u", &right.space(), ur}}, 0.0);
  }
  if (!report_.converged) throw Error("Dirichlet-Neumann iteration failed: " + report_.reason);
}

}  // namespace flexfem::tutorials
