#pragma once

#include "regbal/experiments.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace regbal {

/// Reads replication files with header columns rep, treatment, y_factual,
/// mu0, mu1, x1..xp (any order; other columns are ignored). Rows are pooled
/// across files by rep and replications are returned in ascending rep order.
///
/// With require_oracle false, mu0/mu1 may be absent (no oracle attached) and
/// a missing rep column puts every row in replication 0.
std::vector<SemiSyntheticReplication> load_semisynthetic(
    const std::vector<std::filesystem::path>& paths, bool require_oracle = true);

/// Writes `data` in the loader's schema with full precision.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path, int rep = 0);
void write_replications_csv(const std::vector<SemiSyntheticReplication>& reps,
                            const std::filesystem::path& path);

/// Summary CSV at `path` plus the per-replication long file
/// <stem>.reps.csv next to it. Both are written to a temporary file first
/// and renamed into place.
void write_report_csv(const AggregateReport& report, const std::filesystem::path& path);

std::filesystem::path replication_path(const std::filesystem::path& summary_path);

struct SummaryRecord {
    std::string scheme;
    std::string loss;
    double lambda = 0.0;
    int crossfit = 1;
    double rmse_ra = 0.0;
    double rmse_rw = 0.0;
    double rmse_arw = 0.0;
    double cov_imbalance = 0.0;
    double reg_imbalance = 0.0;
};

std::vector<SummaryRecord> read_report_csv(const std::filesystem::path& path);

}  // namespace regbal
