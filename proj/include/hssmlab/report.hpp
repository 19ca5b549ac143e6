#pragma once

// Row records and their CSV form. Column names and order are part of the
// public interface; golden-file tests pin them.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hssmlab/cost_model.hpp"
#include "hssmlab/ledger.hpp"
#include "hssmlab/trace.hpp"

namespace hssmlab {

enum class RunStatus { Ok, LevelExhausted, ModeledOom };

std::string status_name(RunStatus s);
RunStatus parse_status(std::string_view s);

/// Weights for the modeled `sim_cost` column. Invented units, used only to
/// compare trends between circuit kinds; they are not a latency estimate.
struct SimCostWeights {
  double mul_ct_ct = 10.0;
  double mul_ct_pt = 2.0;
  double rotate = 3.0;
  double add = 1.0;
  double rescale = 2.0;
};

double sim_cost(const OpLedger& ledger, const SimCostWeights& w = {});

struct RunReport {
  std::string model_kind;
  int T = 0;
  int depth = 0;
  bool with_projection = false;
  int repeat = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Ok;
  /// Failing step for level_exhausted, required units for modeled_oom, else 0.
  std::int64_t status_detail = 0;
  int final_level = 0;
  int final_degree = 0;
  OpLedger ledger;
  FootprintReport footprint;
  std::uint64_t logical_state_units = 0;
  double sim_cost = 0.0;
  std::optional<bool> decision_match;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

const std::vector<std::string>& run_report_columns();
void write_run_report_header(std::ostream& out);
void write_run_report_row(std::ostream& out, const RunReport& r);
void write_run_reports(std::ostream& out, const std::vector<RunReport>& rows);
/// Inverse of write_run_reports. Throws ParseError on a bad header or row.
std::vector<RunReport> parse_run_reports(std::istream& in);

const std::vector<std::string>& trace_columns();
/// Trace rows followed by one closing row: stage "final" with the output
/// metadata, or stage "level_exhausted" with the failing step at (0, 2).
void write_trace_csv(std::ostream& out, const StepTrace& trace, RunStatus status,
                     int failing_step = 0);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace hssmlab
