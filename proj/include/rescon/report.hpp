#pragma once

#include <iosfwd>
#include <vector>

#include "rescon/analysis.hpp"
#include "rescon/config.hpp"
#include "rescon/engine.hpp"

namespace rescon {

/// `k,node,state,eps,eta,pi,isolated`, one row per node per recorded round.
void write_trace_csv(std::ostream& out, const RoundTrace& trace);

/// `k,detector,target,eps1,eps2,bound,violated`.
void write_detections_csv(std::ostream& out, const RoundTrace& trace);

/// key = value lines; no timestamps, so identical inputs give identical bytes.
void write_summary(std::ostream& out, const PreparedRun& prepared,
                   const ExperimentSummary& summary);
void write_batch_summary(std::ostream& out, const PreparedRun& prepared,
                         const BatchSummary& batch);

void write_runs_csv(std::ostream& out, const BatchSummary& batch);
void write_comparison_csv(std::ostream& out, const std::vector<ExperimentSummary>& rows);

void write_analysis(std::ostream& out, const PreparedRun& prepared,
                    const ExperimentSummary& summary, const AnalysisToggles& toggles);
void write_batch_analysis(std::ostream& out, const PreparedRun& prepared,
                          const BatchSummary& batch, const AnalysisToggles& toggles);

/// `x,attack_cdf,compensation_cdf` for the first stochastic adversary.
/// Writes nothing useful when no stochastic adversary was detected.
bool write_cdf_grid_csv(std::ostream& out, const PreparedRun& prepared,
                        const ExperimentSummary& summary, std::size_t points);

/// alpha = N max alpha_i with |V_m| all misbehaving nodes and |V_r| the
/// reporting set of `summary`.
double run_deviation_bound(const PreparedRun& prepared, const ExperimentSummary& summary);

}  // namespace rescon
