#pragma once

#include <map>
#include <string>
#include <vector>

#include "mps/gibbs.hpp"
#include "mps/postfit.hpp"
#include "mps/regression.hpp"
#include "mps/simulate.hpp"
#include "mps/types.hpp"

namespace mps {

// responses.csv: header row of item ids (first cell is a label), one row
// per unit: unit_id, then cells in {0, 1, NA, empty}. NA/empty = missing.
ResponseMatrix load_responses(const std::string& path);
void save_responses(const ResponseMatrix& y, const std::string& path);

// CSV of (unit_id, cluster_index), 1-based clusters; a header line is
// allowed. Unlisted units are unconstrained.
std::map<std::string, int> load_unit_cluster_csv(const std::string& path);

// Expands an id-keyed map to a per-unit vector (-1 = free, 0-based pins).
std::vector<int> resolve_constraints(const ResponseMatrix& y,
                                     const std::map<std::string, int>& by_id,
                                     int truncation);

void save_truth(const SimTruth& truth, const std::string& path);
SimTruth load_truth(const std::string& path);

void save_map_state(const MapEstimate& est, const MpsConfig& cfg,
                    const ResponseMatrix& y, const std::string& path);
// Restores the retained state; augmented latents are not serialized and
// come back as zeros.
MapEstimate load_map_state(const std::string& path);

void save_trace(const ChainTrace& trace, const std::string& path);
void save_fit_stats(const MapEstimate& est, const std::string& path);

// covariates.csv: header unit_id,<names...>; numeric cells. Every unit in
// unit_ids must appear exactly once. An intercept column is prepended.
CovariateMatrix load_covariates(const std::string& path,
                                const std::vector<std::string>& unit_ids,
                                const std::vector<int>& outcome);

void save_graph_edges(const ClusterGraph& g, const std::string& path);
void save_gap_curve(const GapCurve& c, const std::string& path);
void save_communities(const ClusterGraph& g, const std::vector<int>& community,
                      double q, const std::string& path);
void save_crosstab(const CrossTab& ct, const std::string& path);
void save_regression(const ProbitSummary& s, const std::string& path);

// Generic comma-split reader: returns rows of fields (header included).
std::vector<std::vector<std::string>> load_csv_table(const std::string& path);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace mps
