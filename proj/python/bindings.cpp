#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hssmlab/bench.hpp"
#include "hssmlab/cost_model.hpp"
#include "hssmlab/mock_ckks.hpp"
#include "hssmlab/pipeline.hpp"
#include "hssmlab/seq_circuits.hpp"

namespace py = pybind11;
using namespace hssmlab;

namespace {

py::dict ledger_dict(const OpLedger& l) {
  py::dict d;
  d["mul_ct_ct"] = l.mul_ct_ct;
  d["mul_ct_pt"] = l.mul_ct_pt;
  d["add"] = l.add;
  d["rescale"] = l.rescale;
  d["level_switch"] = l.level_switch;
  d["rotate"] = l.rotate;
  d["encrypt_count"] = l.encrypt_count;
  d["decrypt_count"] = l.decrypt_count;
  d["clip_events"] = l.clip_events;
  d["live_ciphertexts"] = l.live_ciphertexts;
  d["peak_live_ciphertexts"] = l.peak_live_ciphertexts;
  return d;
}

py::list trace_list(const StepTrace& trace) {
  py::list rows;
  for (const auto& r : trace.rows) {
    py::dict row;
    row["step"] = r.step;
    row["stage"] = r.stage;
    row["level"] = r.level;
    row["degree"] = r.degree;
    row["delta"] = ledger_dict(r.delta);
    rows.append(row);
  }
  return rows;
}

// Circuits return (output, trace rows).
template <class Fn>
py::tuple run_circuit(Fn&& fn) {
  CircuitResult r = fn();
  return py::make_tuple(r.output, trace_list(r.trace));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "hssmlab core: mock CKKS context, sequence circuits, cost model, pipeline";

  auto base = py::register_exception<Error>(m, "HssmlabError");
  py::register_exception<InvalidParams>(m, "InvalidParams", base.ptr());
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base.ptr());
  py::register_exception<RangeViolation>(m, "RangeViolation", base.ptr());
  py::register_exception<DoubleRelease>(m, "DoubleRelease", base.ptr());
  py::register_exception<LevelExhausted>(m, "LevelExhausted", base.ptr());

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("depth_budget", &SimParams::depth_budget)
      .def_readwrite("scale_bits", &SimParams::scale_bits)
      .def_readwrite("slot_count", &SimParams::slot_count)
      .def_readwrite("clip_bound", &SimParams::clip_bound)
      .def_readwrite("ring_dim_label", &SimParams::ring_dim_label)
      .def_readwrite("seed", &SimParams::seed)
      .def("validate", &SimParams::validate)
      .def_static("reference_profile", &SimParams::reference_profile)
      .def_static("pipeline_profile", &SimParams::pipeline_profile);

  py::class_<OpLedger>(m, "OpLedger")
      .def_readonly("mul_ct_ct", &OpLedger::mul_ct_ct)
      .def_readonly("mul_ct_pt", &OpLedger::mul_ct_pt)
      .def_readonly("add", &OpLedger::add)
      .def_readonly("rescale", &OpLedger::rescale)
      .def_readonly("level_switch", &OpLedger::level_switch)
      .def_readonly("rotate", &OpLedger::rotate)
      .def_readonly("encrypt_count", &OpLedger::encrypt_count)
      .def_readonly("decrypt_count", &OpLedger::decrypt_count)
      .def_readonly("clip_events", &OpLedger::clip_events)
      .def_readonly("live_ciphertexts", &OpLedger::live_ciphertexts)
      .def_readonly("peak_live_ciphertexts", &OpLedger::peak_live_ciphertexts)
      .def("as_dict", &ledger_dict);

  py::class_<CtVector>(m, "CtVector")
      .def_property_readonly("level", &CtVector::level)
      .def_property_readonly("degree", &CtVector::degree)
      .def_property_readonly("size", &CtVector::size)
      .def("__repr__", [](const CtVector& c) {
        return "<CtVector level=" + std::to_string(c.level()) +
               " degree=" + std::to_string(c.degree()) + ">";
      });

  py::class_<Context>(m, "Context")
      .def(py::init<SimParams>(), py::arg("params"))
      .def_property_readonly("ledger", &Context::ledger)
      .def_property_readonly("params", &Context::params)
      .def("encrypt", [](Context& c, const std::vector<double>& v) { return c.encrypt(v); })
      .def("decrypt",
           [](Context& c, const CtVector& ct) {
             const Decrypted d = c.decrypt(ct);
             return py::make_tuple(d.values, d.level, d.degree);
           })
      .def("zeros", &Context::zeros)
      .def("normalize_for_mult", &Context::normalize_for_mult)
      .def("mul_cc", &Context::mul_cc)
      .def("mul_cp",
           [](Context& c, const CtVector& ct, const std::vector<double>& p) {
             return c.mul_cp(ct, PtVector(p));
           })
      .def("mul_scalar", py::overload_cast<const CtVector&, double>(&Context::mul_cp))
      .def("add_cc", &Context::add_cc)
      .def("sub_cc", &Context::sub_cc)
      .def("add_cp",
           [](Context& c, const CtVector& ct, const std::vector<double>& p) {
             return c.add_cp(ct, PtVector(p));
           })
      .def("add_scalar", py::overload_cast<const CtVector&, double>(&Context::add_cp))
      .def("rotate_slots", &Context::rotate_slots)
      .def("slot_sum", &Context::slot_sum)
      .def("release", &Context::release);

  py::class_<RowReadout>(m, "RowReadout")
      .def(py::init<>())
      .def(py::init([](std::vector<double> w, double b) { return RowReadout{std::move(w), b}; }),
           py::arg("weights"), py::arg("bias") = 0.0)
      .def_readwrite("weights", &RowReadout::weights)
      .def_readwrite("bias", &RowReadout::bias);

  py::class_<HssmParams>(m, "HssmParams")
      .def(py::init<>())
      .def_readwrite("decays", &HssmParams::decays)
      .def_readwrite("readout", &HssmParams::readout)
      .def_readwrite("bank_combine", &HssmParams::bank_combine);

  py::enum_<AttentionMode>(m, "AttentionMode")
      .value("FINAL_TOKEN", AttentionMode::FinalToken)
      .value("FULL_SEQUENCE", AttentionMode::FullSequence);

  m.def("hssm_streaming", [](Context& c, const std::vector<CtVector>& xs, const HssmParams& p) {
    return run_circuit([&] { return hssm_streaming(c, xs, p); });
  });
  m.def("hssm_closed_form", [](Context& c, const std::vector<CtVector>& xs, const HssmParams& p) {
    return run_circuit([&] { return hssm_closed_form(c, xs, p, false); });
  });
  m.def("hssm_multi_decay", [](Context& c, const std::vector<CtVector>& xs, const HssmParams& p) {
    return run_circuit([&] { return hssm_multi_decay(c, xs, p); });
  });
  m.def("naive_recurrence", [](Context& c, const std::vector<CtVector>& xs) {
    return run_circuit([&] { return naive_recurrence(c, xs, NaiveParams{}); });
  });

  py::enum_<CircuitKind>(m, "CircuitKind")
      .value("HSSM_CLOSED", CircuitKind::HssmClosed)
      .value("HSSM_STREAMING", CircuitKind::HssmStreaming)
      .value("HSSM_MULTI", CircuitKind::HssmMulti)
      .value("NAIVE", CircuitKind::Naive)
      .value("FINAL_TOKEN", CircuitKind::AttnFinalToken)
      .value("FULL_SEQUENCE", CircuitKind::AttnFullSequence);

  py::class_<CircuitShape>(m, "CircuitShape")
      .def(py::init([](CircuitKind kind, int T, int depth, bool proj, std::size_t width,
                       std::size_t decays) {
             return CircuitShape{kind, T, depth, proj, width, decays};
           }),
           py::arg("kind"), py::arg("T") = 8, py::arg("depth") = 8,
           py::arg("with_projection") = false, py::arg("width") = 8, py::arg("decays") = 1)
      .def_readwrite("kind", &CircuitShape::kind)
      .def_readwrite("T", &CircuitShape::T)
      .def_readwrite("depth", &CircuitShape::depth)
      .def_readwrite("with_projection", &CircuitShape::with_projection)
      .def_readwrite("width", &CircuitShape::width)
      .def_readwrite("decays", &CircuitShape::decays);

  py::class_<DepthParams>(m, "DepthParams")
      .def(py::init([](int d_g, int d_w, int d_h0) { return DepthParams{d_g, d_w, d_h0}; }),
           py::arg("d_g") = 1, py::arg("d_w") = 2, py::arg("d_h0") = 0);

  m.def("carry_depth_naive", &carry_depth_naive, py::arg("t"), py::arg("params") = DepthParams{});
  m.def("carry_depth_hssm", &carry_depth_hssm, py::arg("params") = DepthParams{});
  m.def("footprint", [](std::uint64_t T) {
    const FootprintReport f = footprint(T);
    return py::make_tuple(f.state_units, f.feature_cache_units, f.kv_cache_units, f.score_units);
  });
  m.def("logical_state_units", &logical_state_units, py::arg("kind"), py::arg("T"),
        py::arg("decays") = 1);
  m.def("predict_level_trace", [](const CircuitShape& s) {
    const LevelPrediction p = predict_level_trace(s);
    py::dict d;
    d["ok"] = p.ok();
    d["level"] = p.level;
    d["degree"] = p.degree;
    d["failing_step"] = p.exhaustion ? py::cast(p.exhaustion->step) : py::none();
    d["failing_stage"] = p.exhaustion ? py::cast(p.exhaustion->stage) : py::none();
    return d;
  });
  m.def("op_count_model", [](const CircuitShape& s) { return ledger_dict(op_count_model(s)); });
  m.def("stress_check", [](CircuitKind kind, std::uint64_t T, std::uint64_t budget) {
    const StressResult r = stress_check(kind, T, StressBudget{budget});
    return py::make_tuple(r.ok, r.required_units);
  });

  m.def(
      "execute_circuit",
      [](const CircuitShape& s, std::uint64_t seed, double clip) {
        RunOptions opts;
        opts.seed = seed;
        opts.clip_bound = clip;
        const ExecutedRun run = execute_circuit(s, opts);
        py::dict d;
        d["ok"] = run.ok;
        d["level"] = run.level;
        d["degree"] = run.degree;
        d["failing_step"] = run.failing_step;
        d["failing_stage"] = run.failing_stage;
        d["server"] = ledger_dict(run.server);
        d["trace"] = trace_list(run.trace);
        return d;
      },
      py::arg("shape"), py::arg("seed") = kDefaultSeed, py::arg("clip_bound") = 3.0);

  m.def(
      "classify_synthetic",
      [](CircuitKind kind, std::uint64_t seed, std::size_t n_train, std::size_t n_valid) {
        const SyntheticDataset ds = synthetic_dataset(seed, n_train, n_valid);
        const VectorTable table = hashed_vectors(ds.vocabulary, 64, seed);
        PipelineConfig cfg;
        cfg.kind = kind;
        cfg.seed = seed;
        const TrainedPipeline model = train_pipeline(ds.train, table, cfg);
        const MatchReport rep = verify_exact_match(ds.valid, table, model);
        return py::module_::import("json").attr("loads")(match_report_json(rep, -1));
      },
      py::arg("kind") = CircuitKind::HssmClosed, py::arg("seed") = 7, py::arg("n_train") = 400,
      py::arg("n_valid") = 200);
}
