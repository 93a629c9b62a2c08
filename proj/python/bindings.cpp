#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "urbanflow/assignment.hpp"
#include "urbanflow/choice.hpp"
#include "urbanflow/demand.hpp"
#include "urbanflow/error.hpp"
#include "urbanflow/estimation.hpp"
#include "urbanflow/pipeline.hpp"
#include "urbanflow/scenario.hpp"

namespace py = pybind11;
using namespace urbanflow;

namespace {

// (link_id, from, to, length, capacity, free_flow_time, alpha, beta)
using LinkTuple = std::tuple<LinkId, NodeId, NodeId, double, double, double, double, double>;

Network make_network(const std::vector<LinkTuple>& links, const std::vector<NodeId>& zone_nodes) {
    Network net;
    std::map<NodeId, bool> seen;
    for (const auto& [id, from, to, length, capacity, t0, alpha, beta] : links) {
        net.links.push_back({id, from, to, length, capacity, t0, alpha, beta});
        seen[from] = seen[to] = true;
    }
    for (const auto& [n, _] : seen) net.nodes.push_back({n, 0.0, 0.0, std::nullopt});
    for (const auto n : zone_nodes) {
        if (!seen.count(n)) throw AssignmentError("zone node " + std::to_string(n) + " is not on any link");
        net.zone_centroids[n] = n;
    }
    return net;
}

py::dict assignment_dict(const assignment::RoadGraph& g, const assignment::AssignmentResult& r) {
    std::map<LinkId, double> flow, time;
    for (std::size_t a = 0; a < g.link_count(); ++a) {
        flow[g.link(a).link_id] = r.flow[a];
        time[g.link(a).link_id] = r.time[a];
    }
    py::dict d;
    d["flow"] = flow;
    d["time"] = time;
    d["iterations"] = r.iterations;
    d["relative_gap"] = r.relative_gap;
    d["objective"] = r.objective;
    d["converged"] = r.converged;
    return d;
}

py::dict manifest_dict(const pipeline::RunManifest& m) {
    py::dict d;
    d["scenario"] = m.scenario;
    d["global_seed"] = m.global_seed;
    d["start_year"] = m.start_year;
    d["end_year"] = m.end_year;
    d["base_checksum"] = m.base_checksum;
    py::dict years;
    for (const auto& y : m.years) {
        py::dict stages;
        for (std::size_t s = 0; s < pipeline::kStages.size(); ++s) stages[pipeline::kStages[s]] = y.checksums[s];
        years[py::int_(y.year)] = stages;
    }
    d["years"] = years;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Land use, activity demand and traffic assignment core";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ChoiceError>(m, "ChoiceError", base.ptr());
    py::register_exception<AssignmentError>(m, "AssignmentError", base.ptr());
    py::register_exception<StageError>(m, "StageError", base.ptr());

    m.def("mnl_probabilities", [](const std::vector<double>& v) { return choice::mnl_probabilities(v); },
          py::arg("utilities"), "MNL probabilities; -inf marks an unavailable alternative.");
    m.def("logsum", [](const std::vector<double>& v) { return choice::logsum(v); }, py::arg("utilities"));
    m.def("cdap_combination_probabilities",
          [](const std::vector<double>& u, std::size_t n, double joint) {
              return demand::cdap_combination_probabilities(u, n, joint);
          },
          py::arg("utilities"), py::arg("n"), py::arg("joint_coeff"),
          "Probabilities of the 3^n pattern combinations (person i = base-3 digit i; 0=M, 1=N, 2=H).");

    m.def("fit_mnl",
          [](const std::vector<std::string>& variables, const std::vector<std::vector<std::vector<double>>>& x,
             const std::vector<std::size_t>& chosen) {
              if (x.size() != chosen.size()) throw ChoiceError("one chosen index per observation required");
              UtilitySpec spec{"fit", {}};
              for (const auto& v : variables) spec.coefficients.emplace_back(v, 0.0);
              const auto bound = choice::BoundSpec::bind(spec, choice::Schema{{}, variables});
              std::vector<choice::Observation> obs;
              for (std::size_t n = 0; n < x.size(); ++n) {
                  choice::Observation o{{}, choice::ChoiceSet(static_cast<std::int64_t>(n), variables.size()),
                                        chosen[n]};
                  for (std::size_t j = 0; j < x[n].size(); ++j) {
                      if (x[n][j].size() != variables.size()) throw ChoiceError("attribute row width mismatch");
                      o.choices.add(static_cast<std::int64_t>(j), x[n][j]);
                  }
                  obs.push_back(std::move(o));
              }
              const auto r = choice::mnl_fit(bound, obs);
              py::dict d;
              d["coefficients"] = r.coefficients;
              d["std_errors"] = r.std_errors;
              d["loglik"] = r.loglik;
              d["iterations"] = r.iterations;
              d["converged"] = r.status == choice::FitStatus::Converged;
              return d;
          },
          py::arg("variables"), py::arg("attributes"), py::arg("chosen"),
          "Maximum-likelihood MNL over alternative attributes. attributes[n][j] is the row of alternative j "
          "in observation n.");

    m.def("bpr_time",
          [](double t0, double capacity, double flow, double alpha, double beta) {
              Link l;
              l.free_flow_time = t0;
              l.capacity = capacity;
              l.alpha = alpha;
              l.beta = beta;
              return assignment::bpr_time(l, flow);
          },
          py::arg("free_flow_time"), py::arg("capacity"), py::arg("flow"), py::arg("alpha") = 0.15,
          py::arg("beta") = 4.0);

    m.def("frank_wolfe",
          [](const std::vector<LinkTuple>& links, const std::map<std::pair<NodeId, NodeId>, double>& demand,
             int max_iters, double gap_tol, unsigned threads) {
              std::vector<NodeId> zones;
              for (const auto& [od, q] : demand) {
                  zones.push_back(od.first);
                  zones.push_back(od.second);
              }
              std::sort(zones.begin(), zones.end());
              zones.erase(std::unique(zones.begin(), zones.end()), zones.end());
              const assignment::RoadGraph g(make_network(links, zones));
              assignment::OdMatrix od;
              od.zones = g.zone_count();
              od.flow.assign(od.zones * od.zones, 0.0);
              const auto& ids = g.zone_ids();
              const auto at = [&](NodeId z) {
                  return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), z) - ids.begin());
              };
              for (const auto& [pair, q] : demand) od.flow[at(pair.first) * od.zones + at(pair.second)] += q;
              assignment::FrankWolfeOptions options;
              options.max_iters = max_iters;
              options.gap_tol = gap_tol;
              options.threads = threads;
              assignment::AssignmentResult r;
              {
                  py::gil_scoped_release release;
                  r = assignment::frank_wolfe_ue(g, od, options);
              }
              return assignment_dict(g, r);
          },
          py::arg("links"), py::arg("demand"), py::arg("max_iters") = 200, py::arg("gap_tol") = 1e-4,
          py::arg("threads") = 1,
          "User-equilibrium assignment. links: (link_id, from, to, length, capacity, free_flow_time, alpha, beta); "
          "demand: {(origin_node, destination_node): veh/hour}.");

    m.def("validate",
          [](const std::filesystem::path& config) {
              const auto b = load_scenario(config);
              py::dict d;
              d["scenario"] = b.settings.scenario_name;
              d["zones"] = b.zones.size();
              d["links"] = b.network.links.size();
              d["households"] = b.population.households.size();
              d["persons"] = b.population.persons.size();
              d["jobs"] = b.population.jobs.size();
              d["start_year"] = b.settings.start_year;
              d["end_year"] = b.settings.end_year;
              return d;
          },
          py::arg("config"), "Load and check a scenario config.");

    m.def("run",
          [](const std::filesystem::path& config, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
             std::optional<int> years, std::optional<unsigned> threads, std::optional<double> gap_tol) {
              auto b = load_scenario(config);
              auto& s = b.settings;
              if (seed) s.global_seed = *seed;
              if (years) {
                  if (*years < 1) throw ConfigError("years must be >= 1");
                  s.end_year = s.start_year + *years - 1;
              }
              if (threads) s.threads = std::max(1u, *threads);
              if (gap_tol) s.assignment.gap_tol = *gap_tol;
              validate_bundle(b);
              pipeline::RunManifest manifest;
              {
                  py::gil_scoped_release release;
                  manifest = pipeline::run_scenario(b, out_dir);
              }
              return manifest_dict(manifest);
          },
          py::arg("config"), py::arg("out_dir"), py::arg("seed") = py::none(), py::arg("years") = py::none(),
          py::arg("threads") = py::none(), py::arg("gap_tol") = py::none(),
          "Run the annual loop; returns the manifest as a dict.");

    m.def("compare",
          [](const std::filesystem::path& a, const std::filesystem::path& b) {
              py::list rows;
              for (const auto& r : pipeline::compare_scenarios(a, b)) {
                  py::dict d;
                  d["year"] = r.year;
                  d["metric"] = r.metric;
                  d["key"] = r.key;
                  d["a"] = r.a;
                  d["b"] = r.b;
                  d["delta"] = r.b - r.a;
                  rows.append(d);
              }
              return rows;
          },
          py::arg("manifest_a"), py::arg("manifest_b"));

    m.def("report", [](const std::filesystem::path& manifest) { return pipeline::report(manifest); },
          py::arg("manifest"));
}
