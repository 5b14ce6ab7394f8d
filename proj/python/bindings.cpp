#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dirtensor/combinatorics.hpp"
#include "dirtensor/dirichlet.hpp"
#include "dirtensor/identifiability.hpp"
#include "dirtensor/inference.hpp"
#include "dirtensor/metrics.hpp"
#include "dirtensor/models.hpp"

namespace py = pybind11;
using namespace dirtensor;

namespace {

using Rows = std::vector<std::vector<double>>;

py::array_t<double> to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

MixingMeasure measure(const std::vector<double>& weights, const Rows& topics) {
    return MixingMeasure(weights, TopicMatrix(topics));
}

py::tuple from_measure(const MixingMeasure& G) { return py::make_tuple(G.weights(), G.atoms().rows()); }

ModelKind model_kind(const std::string& s) {
    if (s == "lda") return ModelKind::lda;
    if (s == "mixture") return ModelKind::mixture;
    throw std::invalid_argument("model must be 'lda' or 'mixture'");
}

}  // namespace

PYBIND11_MODULE(_dirtensor, m) {
    m.doc() = "Dirichlet moment tensors, LDA and mixture-of-products densities, identifiability probes";

    m.def("moment_tensor", [](const std::vector<double>& alpha, std::size_t N) {
        return to_numpy(moment_tensor_closed(DirichletParam(alpha), N));
    }, py::arg("alpha"), py::arg("N"));
    m.def("moment_tensor_from_diagonals", [](const std::vector<double>& alpha, std::size_t N) {
        return to_numpy(moment_tensor_from_diagonals(DirichletParam(alpha), N));
    }, py::arg("alpha"), py::arg("N"));
    m.def("diagonal_from_moments", [](const std::vector<double>& alpha, std::size_t N) {
        return to_numpy(diagonal_from_moments(DirichletParam(alpha), N));
    }, py::arg("alpha"), py::arg("N"));
    m.def("linear_moments", [](const std::vector<double>& alpha, const std::vector<double>& x, std::size_t N_max) {
        return linear_moments_recursive(DirichletParam(alpha), x, N_max);
    }, py::arg("alpha"), py::arg("x"), py::arg("N_max"));
    m.def("monte_carlo_linear_moments",
          [](const std::vector<double>& alpha, const std::vector<double>& x, std::size_t N_max, std::size_t draws,
             std::uint64_t seed) {
              RngStream rng(seed);
              py::list out;
              for (const auto& e : monte_carlo_linear_moments(DirichletParam(alpha), x, N_max, draws, rng))
                  out.append(py::make_tuple(e.estimate, e.std_error));
              return out;
          },
          py::arg("alpha"), py::arg("x"), py::arg("N_max"), py::arg("draws"), py::arg("seed") = 1);

    m.def("lda_density", [](const std::vector<double>& weights, const Rows& topics, double abar, std::size_t N) {
        return to_numpy(lda_density(LdaParams(measure(weights, topics), abar), N).table);
    }, py::arg("weights"), py::arg("topics"), py::arg("abar"), py::arg("N"));
    m.def("mixture_density", [](const std::vector<double>& weights, const Rows& topics, std::size_t N) {
        return to_numpy(mixture_density(measure(weights, topics), N).table);
    }, py::arg("weights"), py::arg("topics"), py::arg("N"));
    m.def("lda_from_mixture_marginals",
          [](const std::vector<double>& weights, const Rows& topics, double abar, std::size_t N) {
              return to_numpy(lda_from_mixture_marginals(measure(weights, topics), abar, N).table);
          },
          py::arg("weights"), py::arg("topics"), py::arg("abar"), py::arg("N"));
    m.def("mixture_from_lda_marginals",
          [](const std::vector<double>& weights, const Rows& topics, double abar, std::size_t N) {
              return to_numpy(mixture_from_lda_marginals(LdaParams(measure(weights, topics), abar), N).table);
          },
          py::arg("weights"), py::arg("topics"), py::arg("abar"), py::arg("N"));

    m.def("wasserstein",
          [](const std::vector<double>& w1, const Rows& t1, const std::vector<double>& w2, const Rows& t2, double r) {
              return wasserstein(measure(w1, t1), measure(w2, t2), r).value;
          },
          py::arg("weights1"), py::arg("topics1"), py::arg("weights2"), py::arg("topics2"), py::arg("r") = 1.0);
    m.def("tv_distance", [](const std::vector<double>& p, const std::vector<double>& q) { return tv_distance(p, q); },
          py::arg("p"), py::arg("q"));
    m.def("c1_constant", &c1_constant, py::arg("N"), py::arg("abar"));
    m.def("c2_constant", &c2_constant, py::arg("N"), py::arg("abar"));

    m.def("kruskal_rank", [](const Rows& topics) {
        const auto info = kruskal_rank(TopicMatrix(topics));
        return py::make_tuple(info.rank, info.kruskal_rank);
    }, py::arg("topics"));
    m.def("anchor_words", [](const Rows& topics) -> py::object {
        const auto a = anchor_word_check(TopicMatrix(topics));
        if (!a.has_anchor) return py::none();
        return py::cast(a.anchors);
    }, py::arg("topics"));
    m.def("desk_instance", [](const std::string& condition, std::size_t K0, std::size_t V, std::uint64_t seed) {
        return from_measure(desk_instance(condition_from_string(condition), K0, V, RngStream(seed)));
    }, py::arg("condition"), py::arg("K0"), py::arg("V"), py::arg("seed") = 1);
    m.def("identifiability_probe",
          [](const std::vector<double>& weights, const Rows& topics, double abar, std::size_t N, std::size_t K_fit,
             std::size_t restarts, const std::string& model, std::uint64_t seed) {
              ProbeOptions opts;
              opts.restarts = restarts;
              opts.model = model_kind(model);
              const auto r = identifiability_probe(measure(weights, topics), abar, N, K_fit, opts, RngStream(seed));
              py::dict d;
              d["verdict"] = to_string(r.verdict);
              d["best_objective"] = r.best_objective;
              d["witness"] = r.witness ? py::object(from_measure(*r.witness)) : py::none();
              d["witness_tv"] = r.witness_tv;
              d["witness_w1"] = r.witness_w1;
              return d;
          },
          py::arg("weights"), py::arg("topics"), py::arg("abar"), py::arg("N"), py::arg("K_fit"),
          py::arg("restarts") = 16, py::arg("model") = "lda", py::arg("seed") = 1);

    m.def("contraction_experiment",
          [](std::size_t V, std::size_t N, const std::vector<std::size_t>& m_grid, std::size_t replications,
             std::size_t K_fit, double r, std::size_t steps, std::size_t burn_in, std::uint64_t seed, std::size_t jobs) {
              ContractionConfig cfg;
              cfg.V = V;
              cfg.N = N;
              cfg.m_grid = m_grid;
              cfg.replications = replications;
              cfg.K_fit = K_fit;
              cfg.r = r;
              cfg.mcmc.steps = steps;
              cfg.mcmc.burn_in = burn_in;
              cfg.seed = seed;
              cfg.jobs = jobs;
              const auto res = contraction_experiment(cfg);
              py::dict d;
              py::list means;
              for (const auto& s : res.per_m) means.append(s.mean);
              d["mean_w"] = means;
              d["slope"] = res.slope ? py::object(py::float_(res.slope->slope)) : py::none();
              d["failures"] = res.failures;
              return d;
          },
          py::arg("V") = 10, py::arg("N") = 20, py::arg("m_grid") = std::vector<std::size_t>{100, 316, 1000, 3162},
          py::arg("replications") = 8, py::arg("K_fit") = 4, py::arg("r") = 1.0, py::arg("steps") = 2000,
          py::arg("burn_in") = 500, py::arg("seed") = 1, py::arg("jobs") = 1);
}
