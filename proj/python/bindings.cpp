// SPDX-FileCopyrightText: Copyright (c) 2026 vscreen contributors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vscreen/chem.hpp"
#include "vscreen/diffusion.hpp"
#include "vscreen/domain.hpp"
#include "vscreen/errors.hpp"
#include "vscreen/pipeline.hpp"
#include "vscreen/similarity.hpp"

namespace py = pybind11;
using namespace vscreen;

namespace {

std::vector<Molecule> parseAll(const std::vector<std::string>& smiles) {
  std::vector<Molecule> out;
  out.reserve(smiles.size());
  for (const auto& s : smiles) out.push_back(parseSmiles(s));
  return out;
}

}  // namespace

PYBIND11_MODULE(_vscreen, m) {
  m.doc() = "vscreen native core";

  static py::handle errorType = py::exception<Error>(m, "VscreenError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = errorType(py::str(e.what()));
      exc.attr("code") = std::string(errorCodeName(e.code()));
      exc.attr("position") = e.position() ? py::cast(*e.position()) : py::none();
      PyErr_SetObject(errorType.ptr(), exc.ptr());
    }
  });

  m.attr("__version__") = std::string(toolVersion());

  py::class_<Molecule>(m, "Molecule")
      .def_property_readonly("num_atoms", &Molecule::numAtoms)
      .def_property_readonly("num_bonds", &Molecule::numBonds)
      .def_property_readonly("num_heavy_atoms", &Molecule::numHeavyAtoms)
      .def_property_readonly("ring_count", &Molecule::ringCount)
      .def_property("name", &Molecule::name, &Molecule::setName)
      .def("to_smiles", [](const Molecule& mol) { return writeSmiles(mol); })
      .def("elements", [](const Molecule& mol) {
        std::vector<std::string> out;
        for (const auto& a : mol.atoms()) out.emplace_back(elementSymbol(a.element));
        return out;
      })
      .def("__repr__", [](const Molecule& mol) { return "<Molecule " + writeSmiles(mol) + ">"; });

  m.def("parse_smiles", &parseSmiles, py::arg("smiles"));
  m.def("write_smiles", &writeSmiles, py::arg("mol"));
  m.def("load_molecules", &loadMolecules, py::arg("path"));
  m.def("is_isomorphic", &isIsomorphic, py::arg("a"), py::arg("b"));
  m.def("has_substructure", &hasSubstructure, py::arg("mol"), py::arg("pattern"));
  m.def(
      "to_tensors",
      [](const Molecule& mol) {
        const auto t = toTensors(mol);
        return py::make_tuple(t.X, t.A);
      },
      py::arg("mol"));

  m.def(
      "fingerprint",
      [](const Molecule& mol, int radius, int width) { return morganFingerprint(mol, radius, width).onBits(); },
      py::arg("mol"), py::arg("radius") = kDefaultFingerprintRadius, py::arg("width") = kDefaultFingerprintWidth);
  m.def(
      "tanimoto",
      [](const Molecule& a, const Molecule& b, int radius, int width) {
        return tanimoto(morganFingerprint(a, radius, width), morganFingerprint(b, radius, width));
      },
      py::arg("a"), py::arg("b"), py::arg("radius") = kDefaultFingerprintRadius, py::arg("width") = kDefaultFingerprintWidth);
  m.def("edit_similarity", &editSimilarity, py::arg("a"), py::arg("b"));
  m.def(
      "wl_similarity", [](const Molecule& a, const Molecule& b, int it) { return wlSimilarity(a, b, it); }, py::arg("a"),
      py::arg("b"), py::arg("iterations") = kDefaultWlIterations);

  m.def(
      "wasserstein",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return wassersteinDistance(DomainSample{"a", a}, DomainSample{"b", b});
      },
      py::arg("a"), py::arg("b"), "Exact W1 between two uniformly weighted point sets (rows).");

  m.def(
      "graph_statistics", [](const Molecule& mol) { return Eigen::VectorXd(graphStatistics(mol)); }, py::arg("mol"));
  m.def(
      "mmd",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b, std::optional<double> bandwidth) {
        const auto ma = parseAll(a);
        const auto mb = parseAll(b);
        return mmdMetric(ma, mb, bandwidth);
      },
      py::arg("a"), py::arg("b"), py::arg("bandwidth") = py::none());

  m.def("job_schema", &jobSchemaJson);
  m.def(
      "run_job",
      [](const std::string& specJson) {
        const JobSpec   spec = JobSpec::fromJson(specJson);
        JobOutput       out;
        {
          py::gil_scoped_release release;
          out = runJob(spec);
        }
        py::dict artifacts;
        for (const auto& [name, bytes] : out.artifacts) artifacts[py::str(name)] = py::bytes(bytes);
        return py::make_tuple(artifacts, out.log);
      },
      py::arg("spec_json"), "Runs a JSON job spec; returns (artifacts: dict[str, bytes], log: list[str]).");
  m.def("spec_hash", [](const std::string& specJson) { return specHash(JobSpec::fromJson(specJson)); }, py::arg("spec_json"));
}
