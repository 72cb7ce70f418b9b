// Python module: meshes, pencil assembly, eigensolves and the two-family model.

#include "vemeig/studies.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace vemeig;

PYBIND11_MODULE(_vemeig, m) {
  m.doc() = "Virtual element eigenvalue problems on polygonal meshes";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MeshError>(m, "MeshError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<PolygonalMesh>(m, "Mesh")
      .def_property_readonly("num_cells", &PolygonalMesh::num_cells)
      .def_property_readonly("num_vertices", &PolygonalMesh::num_vertices)
      .def_property_readonly("num_edges", &PolygonalMesh::num_edges)
      .def_property_readonly("h", &PolygonalMesh::h)
      .def_property_readonly("cells", &PolygonalMesh::cells)
      .def_property_readonly("vertices",
                             [](const PolygonalMesh& mesh) {
                               Eigen::MatrixX2d v(mesh.num_vertices(), 2);
                               for (int i = 0; i < mesh.num_vertices(); ++i) v.row(i) = mesh.vertices()[i].transpose();
                               return v;
                             })
      .def("total_area", &PolygonalMesh::total_area)
      .def_property_readonly("mesh_id", [](const PolygonalMesh& mesh) { return mesh_id(mesh); });

  m.def(
      "make_mesh", [](const std::string& domain, const std::string& source) {
        return make_mesh(Domain::parse(domain), source);
      },
      py::arg("domain"), py::arg("source"),
      "Mesh of 'square' or 'lshape' from 'voronoi:N:SEED', 'cartesian:N', 'triangle:N' or a file path.");
  m.def("nominal_h", &nominal_h, py::arg("mesh"));

  py::class_<AssembledPencil>(m, "Pencil")
      .def_readonly("A1", &AssembledPencil::A1)
      .def_readonly("A2", &AssembledPencil::A2)
      .def_readonly("M1", &AssembledPencil::M1)
      .def_readonly("M2", &AssembledPencil::M2)
      .def_property_readonly("size", &AssembledPencil::size)
      .def("A", &AssembledPencil::A, py::arg("alpha"))
      .def("M", &AssembledPencil::M, py::arg("beta"));

  m.def(
      "assemble",
      [](const PolygonalMesh& mesh, int k, const std::string& space, const std::string& bc, const std::string& stab_a,
         const std::string& stab_b, const std::string& mode) {
        const DofMap dofs = build_dof_map(mesh, parse_space(space), k, parse_boundary_condition(bc));
        return assemble_pencil(mesh, dofs,
                               {.stab_a = parse_stiffness_stab(stab_a),
                                .stab_b = parse_mass_stab(stab_b),
                                .mode = parse_parameter_mode(mode)});
      },
      py::arg("mesh"), py::arg("k"), py::arg("space") = "conf", py::arg("bc") = "dirichlet",
      py::arg("stab_a") = "dofi", py::arg("stab_b") = "dofi", py::arg("mode") = "recipe");

  py::class_<SpectralResult>(m, "SpectralResult")
      .def_readonly("eigenvalues", &SpectralResult::eigenvalues)
      .def_readonly("eigenvectors", &SpectralResult::eigenvectors)
      .def_readonly("residuals", &SpectralResult::residuals)
      .def_readonly("num_infinite", &SpectralResult::num_infinite)
      .def_readonly("num_indeterminate", &SpectralResult::num_indeterminate)
      .def_readonly("num_finite", &SpectralResult::num_finite);

  m.def(
      "solve",
      [](const AssembledPencil& pencil, double alpha, double beta, int n_lowest, int dense_limit, bool count_infinite) {
        SolveOptions o;
        o.dense_limit = dense_limit;
        o.count_infinite = count_infinite;
        py::gil_scoped_release release;
        return solve_lowest(pencil, alpha, beta, n_lowest, o);
      },
      py::arg("pencil"), py::arg("alpha") = 1.0, py::arg("beta") = 1.0, py::arg("n_lowest") = 6,
      py::arg("dense_limit") = 1500, py::arg("count_infinite") = false);
  m.def(
      "solve_dense",
      [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, int n_lowest, double kernel_tol) {
        return solve_pencil(A, M, n_lowest, kernel_tol);
      },
      py::arg("A"), py::arg("M"), py::arg("n_lowest") = 0, py::arg("kernel_tol") = kDefaultKernelTol);
  m.def("kernel_dim", &kernel_dim, py::arg("S"), py::arg("kernel_tol") = kDefaultKernelTol);
  m.def("exact_square_spectrum", &exact_square_spectrum, py::arg("n_lowest"));

  py::class_<SyntheticPencil>(m, "SyntheticPencil")
      .def_readonly("A1", &SyntheticPencil::A1)
      .def_readonly("A2", &SyntheticPencil::A2)
      .def_readonly("M1", &SyntheticPencil::M1)
      .def_readonly("M2", &SyntheticPencil::M2)
      .def_readonly("mu", &SyntheticPencil::mu)
      .def_readonly("omega", &SyntheticPencil::omega);
  m.def("build_synthetic_pencil", &build_synthetic_pencil, py::arg("n"), py::arg("dim_kerA1"), py::arg("dim_kerM1"),
        py::arg("rng_seed"), py::arg("rotate") = true);
  m.def("predict_families", &predict_families, py::arg("pencil"), py::arg("alpha"), py::arg("beta"));
}
