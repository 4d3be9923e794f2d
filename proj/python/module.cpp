#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "madm/asymptotics.hpp"
#include "madm/errors.hpp"
#include "madm/exact.hpp"
#include "madm/fredholm.hpp"
#include "madm/model.hpp"
#include "madm/simulator.hpp"

namespace py = pybind11;
using namespace madm;

namespace {

ModelParams params(double u, double p) { return ModelParams::make(u, p < 0 ? u : p); }

py::dict prob_dict(const fred::ProbResult& r) {
    py::dict d;
    d["prob"] = r.prob;
    d["imag_residual"] = r.imag_residual;
    d["refine_delta"] = r.refine_delta;
    return d;
}

}  // namespace

PYBIND11_MODULE(madm, m) {
    m.doc() = "Multi-particle hopping asymmetric diffusion: exact formulas, simulation and asymptotics";
    m.attr("__version__") = MADM_VERSION;
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ToleranceError>(m, "ToleranceError", PyExc_ArithmeticError);

    py::class_<ModelParams>(m, "ModelParams")
        .def_static("make", &ModelParams::make, py::arg("u"), py::arg("p"))
        .def_static("one_param", &ModelParams::one_param, py::arg("u"))
        .def_readonly("u", &ModelParams::u)
        .def_readonly("v", &ModelParams::v)
        .def_readonly("p", &ModelParams::p)
        .def_readonly("q", &ModelParams::q)
        .def_readonly("tau", &ModelParams::tau)
        .def_readonly("gamma", &ModelParams::gamma);

    m.def("q_bracket", py::overload_cast<long, double>(&q_bracket), py::arg("n"), py::arg("tau"));
    m.def("rate_right", [](long n, double u, double p) { return rate_right(n, params(u, p)); }, py::arg("n"),
          py::arg("u"), py::arg("p") = -1.0);
    m.def("rate_left", [](long n, double u, double p) { return rate_left(n, params(u, p)); }, py::arg("n"),
          py::arg("u"), py::arg("p") = -1.0);
    m.def("gaussian_binomial", &gaussian_binomial, py::arg("m"), py::arg("r"), py::arg("tau"));

    m.def(
        "contour_prob_finite",
        [](const std::vector<long>& Y, int mm, long x, double t, double u, double p) {
            return exact::contour_prob_finite(Y, mm, x, t, params(u, p)).prob;
        },
        py::arg("Y"), py::arg("m"), py::arg("x"), py::arg("t"), py::arg("u"), py::arg("p") = -1.0,
        "P(x_m <= x) for the finite system started at Y; t is physical time");
    m.def(
        "master_equation_cdf",
        [](const std::vector<long>& Y, int mm, const std::vector<long>& xs, double t, double u, double p) {
            return exact::master_equation_cdf(Y, mm, xs, t, params(u, p)).cdf;
        },
        py::arg("Y"), py::arg("m"), py::arg("xs"), py::arg("t"), py::arg("u"), py::arg("p") = -1.0);

    m.def(
        "prob_two_param",
        [](int mm, double t, long x, double u, double p, bool refine) {
            fred::TwoParamQuad q;
            q.refine = refine;
            return prob_dict(fred::prob_two_param({mm, t, x}, params(u, p), q));
        },
        py::arg("m"), py::arg("t"), py::arg("x"), py::arg("u"), py::arg("p") = -1.0, py::arg("refine") = true,
        "step-initial P(x_m(t/gamma) <= x); t is formula time");
    m.def(
        "prob_one_param",
        [](int mm, double t, long x, double u, int nodes, bool refine) {
            fred::OneParamQuad q;
            if (nodes > 0) q.contours.nodes = nodes;
            q.refine = refine;
            return prob_dict(fred::prob_one_param({mm, t, x}, ModelParams::one_param(u), q));
        },
        py::arg("m"), py::arg("t"), py::arg("x"), py::arg("u"), py::arg("nodes") = 0, py::arg("refine") = true);
    m.def(
        "product_identity",
        [](std::complex<double> lam, long x, double t, double u, int nodes) {
            fred::KernelParams kp;
            kp.x = x;
            kp.t = t;
            kp.params = ModelParams::one_param(u);
            return fred::product_identity(kp, lam, nodes).deviation;
        },
        py::arg("lam"), py::arg("x"), py::arg("t"), py::arg("u"), py::arg("nodes") = 64);

    m.def(
        "sample_xm",
        [](const std::vector<long>& Y, int mm, double t, double u, double p, long replicas, uint64_t seed,
           int threads) {
            auto cfg = sim::SimConfig::finite(params(u, p), Y, t);
            cfg.replicas = replicas;
            cfg.seed = seed;
            cfg.threads = threads;
            return sim::sample_xm(cfg, mm);
        },
        py::arg("Y"), py::arg("m"), py::arg("t"), py::arg("u"), py::arg("p") = -1.0, py::arg("replicas") = 1000,
        py::arg("seed") = 1, py::arg("threads") = 1, "x_m samples of the finite system at physical time t");
    m.def(
        "sample_xm_step",
        [](int mm, double t_physical, double u, double p, long n_big, long replicas, uint64_t seed, int threads) {
            auto cfg = sim::SimConfig::step_initial(params(u, p), t_physical, n_big);
            cfg.replicas = replicas;
            cfg.seed = seed;
            cfg.threads = threads;
            return sim::sample_xm(cfg, mm);
        },
        py::arg("m"), py::arg("t_physical"), py::arg("u"), py::arg("p") = -1.0, py::arg("n_big") = 64,
        py::arg("replicas") = 1000, py::arg("seed") = 1, py::arg("threads") = 1);

    m.def("airy_ai", &asym::airy_ai, py::arg("x"));
    m.def("airy_ai_prime", &asym::airy_ai_prime, py::arg("x"));
    m.def("f2", &asym::f2, py::arg("s"), py::arg("n") = 60);
    m.def(
        "tw_experiment",
        [](double sigma, double t, double u, long replicas, uint64_t seed, bool corrected, int threads) {
            asym::TWOptions o;
            o.sigma = sigma;
            o.t = t;
            o.params = ModelParams::one_param(u);
            o.replicas = replicas;
            o.seed = seed;
            o.threads = threads;
            o.constants = corrected ? asym::Constants::Corrected : asym::Constants::Stated;
            const auto r = asym::tw_experiment(o);
            py::dict d;
            d["m"] = r.m;
            d["ks_distance"] = r.ks_distance;
            d["s"] = r.s_grid;
            d["empirical"] = r.empirical;
            d["limit"] = r.limit;
            d["stderr"] = r.stderrs;
            return d;
        },
        py::arg("sigma"), py::arg("t"), py::arg("u"), py::arg("replicas") = 2000, py::arg("seed") = 1,
        py::arg("corrected") = true, py::arg("threads") = 1);
}
