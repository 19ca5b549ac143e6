#include "hssmlab/report.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "hssmlab/errors.hpp"

namespace hssmlab {

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::LevelExhausted: return "level_exhausted";
    case RunStatus::ModeledOom: return "modeled_oom";
  }
  return "ok";
}

RunStatus parse_status(std::string_view s) {
  if (s == "ok") return RunStatus::Ok;
  if (s == "level_exhausted") return RunStatus::LevelExhausted;
  if (s == "modeled_oom") return RunStatus::ModeledOom;
  throw InvalidParams("unknown status '" + std::string(s) + "'");
}

double sim_cost(const OpLedger& l, const SimCostWeights& w) {
  return w.mul_ct_ct * static_cast<double>(l.mul_ct_ct) +
         w.mul_ct_pt * static_cast<double>(l.mul_ct_pt) +
         w.rotate * static_cast<double>(l.rotate) + w.add * static_cast<double>(l.add) +
         w.rescale * static_cast<double>(l.rescale);
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

const std::vector<std::string>& run_report_columns() {
  static const std::vector<std::string> cols{
      "model_kind",      "T",
      "depth",           "with_projection",
      "repeat",          "seed",
      "status",          "status_detail",
      "final_level",     "final_degree",
      "mul_ct_ct",       "mul_ct_pt",
      "add",             "rescale",
      "level_switch",    "rotate",
      "encrypt_count",   "decrypt_count",
      "clip_events",     "live_ciphertexts",
      "peak_live_ciphertexts", "state_units",
      "feature_cache_units",   "kv_cache_units",
      "score_units",     "logical_state_units",
      "sim_cost",        "decision_match",
  };
  return cols;
}

namespace {

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t line) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "bad numeric field '" + s + "'");
  }
  return value;
}

}  // namespace

void write_run_report_header(std::ostream& out) { out << join(run_report_columns()) << '\n'; }

void write_run_report_row(std::ostream& out, const RunReport& r) {
  const auto u = [](std::uint64_t v) { return std::to_string(v); };
  const OpLedger& l = r.ledger;
  std::vector<std::string> f{
      r.model_kind,
      std::to_string(r.T),
      std::to_string(r.depth),
      r.with_projection ? "1" : "0",
      std::to_string(r.repeat),
      u(r.seed),
      status_name(r.status),
      std::to_string(r.status_detail),
      std::to_string(r.final_level),
      std::to_string(r.final_degree),
      u(l.mul_ct_ct),
      u(l.mul_ct_pt),
      u(l.add),
      u(l.rescale),
      u(l.level_switch),
      u(l.rotate),
      u(l.encrypt_count),
      u(l.decrypt_count),
      u(l.clip_events),
      u(l.live_ciphertexts),
      u(l.peak_live_ciphertexts),
      u(r.footprint.state_units),
      u(r.footprint.feature_cache_units),
      u(r.footprint.kv_cache_units),
      u(r.footprint.score_units),
      u(r.logical_state_units),
      format_double(r.sim_cost),
      r.decision_match ? (*r.decision_match ? "1" : "0") : "",
  };
  out << join(f) << '\n';
}

void write_run_reports(std::ostream& out, const std::vector<RunReport>& rows) {
  write_run_report_header(out);
  for (const auto& r : rows) {
    write_run_report_row(out, r);
  }
}

std::vector<RunReport> parse_run_reports(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split(line) != run_report_columns()) {
    throw ParseError(1, "unexpected run report header");
  }
  std::vector<RunReport> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != run_report_columns().size()) {
      throw ParseError(lineno, "expected " + std::to_string(run_report_columns().size()) +
                                   " fields, got " + std::to_string(f.size()));
    }
    const auto u = [&](std::size_t i) { return parse_number<std::uint64_t>(f[i], lineno); };
    const auto i32 = [&](std::size_t i) { return parse_number<int>(f[i], lineno); };
    RunReport r;
    r.model_kind = f[0];
    r.T = i32(1);
    r.depth = i32(2);
    r.with_projection = i32(3) != 0;
    r.repeat = i32(4);
    r.seed = u(5);
    try {
      r.status = parse_status(f[6]);
    } catch (const InvalidParams& e) {
      throw ParseError(lineno, e.what());
    }
    r.status_detail = parse_number<std::int64_t>(f[7], lineno);
    r.final_level = i32(8);
    r.final_degree = i32(9);
    r.ledger.mul_ct_ct = u(10);
    r.ledger.mul_ct_pt = u(11);
    r.ledger.add = u(12);
    r.ledger.rescale = u(13);
    r.ledger.level_switch = u(14);
    r.ledger.rotate = u(15);
    r.ledger.encrypt_count = u(16);
    r.ledger.decrypt_count = u(17);
    r.ledger.clip_events = u(18);
    r.ledger.live_ciphertexts = u(19);
    r.ledger.peak_live_ciphertexts = u(20);
    r.footprint.state_units = u(21);
    r.footprint.feature_cache_units = u(22);
    r.footprint.kv_cache_units = u(23);
    r.footprint.score_units = u(24);
    r.logical_state_units = u(25);
    r.sim_cost = parse_number<double>(f[26], lineno);
    if (!f[27].empty()) {
      r.decision_match = i32(27) != 0;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{
      "step",      "stage",  "level", "degree",  "mul_ct_ct", "mul_ct_pt",
      "add",       "rescale", "level_switch", "rotate", "clip_events",
  };
  return cols;
}

void write_trace_csv(std::ostream& out, const StepTrace& trace, RunStatus status,
                     int failing_step) {
  out << join(trace_columns()) << '\n';
  const auto row = [&out](int step, const std::string& stage, int level, int degree,
                          const OpLedger& d) {
    out << step << ',' << stage << ',' << level << ',' << degree << ',' << d.mul_ct_ct << ','
        << d.mul_ct_pt << ',' << d.add << ',' << d.rescale << ',' << d.level_switch << ','
        << d.rotate << ',' << d.clip_events << '\n';
  };
  for (const auto& r : trace.rows) {
    row(r.step, r.stage, r.level, r.degree, r.delta);
  }
  if (status == RunStatus::LevelExhausted) {
    row(failing_step, "level_exhausted", 0, 2, OpLedger{});
  } else if (!trace.empty()) {
    row(trace.back().step, "final", trace.back().level, trace.back().degree, OpLedger{});
  }
}

}  // namespace hssmlab
