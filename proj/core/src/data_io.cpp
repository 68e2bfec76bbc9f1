#include "regbal/data_io.hpp"

#include "regbal/error.hpp"
#include "regbal/summation.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <system_error>

namespace regbal {

namespace fs = std::filesystem;

namespace {

const char* const kSummaryHeader =
    "scheme,loss,lambda,crossfit,rmse_ra,rmse_rw,rmse_arw,cov_imbalance,reg_imbalance";
const char* const kLongHeader =
    "rep,scheme,loss,lambda,crossfit,estimator,estimate,target,error,cov_imbalance,"
    "reg_imbalance,ne,noise,drift";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
        s.remove_prefix(1);
    }
    while (!s.empty() &&
           (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(path.string() + ": cannot open: " +
                    std::error_code(errno, std::generic_category()).message());
    }
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        for (auto c : split(line)) cells.emplace_back(c);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw Error(path.string() + ": empty file");
    return t;
}

std::optional<std::size_t> find_column(const Table& t, std::string_view name) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (t.header[j] == name) return j;
    }
    return std::nullopt;
}

std::size_t require_column(const Table& t, std::string_view name, const fs::path& path) {
    auto j = find_column(t, name);
    if (!j) throw Error(path.string() + ": missing column '" + std::string(name) + "'");
    return *j;
}

double cell_value(const Table& t, std::size_t row, std::size_t col, const fs::path& path) {
    const auto& r = t.rows[row];
    const std::string where =
        path.string() + ": row " + std::to_string(row + 1) + ", column '" + t.header[col] + "'";
    if (col >= r.size() || r[col].empty()) throw Error(where + ": missing value");
    const auto v = parse_number(r[col]);
    if (!v) throw Error(where + ": not a number '" + r[col] + "'");
    if (std::isnan(*v)) throw Error(where + ": NaN value");
    if (!std::isfinite(*v)) throw Error(where + ": non-finite value");
    return *v;
}

struct PooledRows {
    std::vector<double> d, y, mu0, mu1;
    std::vector<std::vector<double>> x;
};

void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(path.string() + ": cannot write: " +
                        std::error_code(errno, std::generic_category()).message());
        }
        out << content;
        out.flush();
        if (!out) throw Error(path.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(path.string() + ": " + ec.message());
    }
}

}  // namespace

std::vector<SemiSyntheticReplication> load_semisynthetic(const std::vector<fs::path>& paths,
                                                         bool require_oracle) {
    if (paths.empty()) throw Error("no input files given");
    std::map<int, PooledRows> pooled;
    std::optional<std::size_t> p_all;
    bool oracle_all = true;

    for (const fs::path& path : paths) {
        const Table t = read_table(path);
        const auto rep_col = require_oracle ? std::optional(require_column(t, "rep", path))
                                            : find_column(t, "rep");
        const std::size_t d_col = require_column(t, "treatment", path);
        const std::size_t y_col = require_column(t, "y_factual", path);
        std::optional<std::size_t> mu0_col, mu1_col;
        if (require_oracle) {
            mu0_col = require_column(t, "mu0", path);
            mu1_col = require_column(t, "mu1", path);
        } else {
            mu0_col = find_column(t, "mu0");
            mu1_col = find_column(t, "mu1");
        }
        const bool has_oracle = mu0_col && mu1_col;
        oracle_all = oracle_all && has_oracle;

        std::vector<std::size_t> x_cols;
        for (std::size_t k = 1;; ++k) {
            auto j = find_column(t, "x" + std::to_string(k));
            if (!j) break;
            x_cols.push_back(*j);
        }
        if (x_cols.empty()) throw Error(path.string() + ": missing column 'x1'");
        if (p_all && *p_all != x_cols.size()) {
            throw Error(path.string() + ": covariate count differs from earlier files");
        }
        p_all = x_cols.size();

        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const double rep_v = rep_col ? cell_value(t, r, *rep_col, path) : 0.0;
            if (rep_v != std::floor(rep_v)) {
                throw Error(path.string() + ": row " + std::to_string(r + 1) +
                            ": rep must be an integer");
            }
            const double dv = cell_value(t, r, d_col, path);
            if (dv != 0.0 && dv != 1.0) {
                throw Error(path.string() + ": row " + std::to_string(r + 1) +
                            ": treatment must be 0 or 1");
            }
            PooledRows& dst = pooled[static_cast<int>(rep_v)];
            dst.d.push_back(dv);
            dst.y.push_back(cell_value(t, r, y_col, path));
            if (has_oracle) {
                dst.mu0.push_back(cell_value(t, r, *mu0_col, path));
                dst.mu1.push_back(cell_value(t, r, *mu1_col, path));
            }
            std::vector<double> xs;
            xs.reserve(x_cols.size());
            for (std::size_t j : x_cols) xs.push_back(cell_value(t, r, j, path));
            dst.x.push_back(std::move(xs));
        }
    }

    std::vector<SemiSyntheticReplication> out;
    for (auto& [rep, rows] : pooled) {
        const auto n = static_cast<Eigen::Index>(rows.d.size());
        const auto p = static_cast<Eigen::Index>(*p_all);
        Eigen::MatrixXd z(n, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) z(i, j) = rows.x[i][j];
        }
        Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(rows.d.data(), n);
        Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(rows.y.data(), n);
        std::optional<Oracle> oracle;
        double ate = std::nan("");
        if (oracle_all) {
            Eigen::VectorXd mu0 = Eigen::Map<Eigen::VectorXd>(rows.mu0.data(), n);
            Eigen::VectorXd mu1 = Eigen::Map<Eigen::VectorXd>(rows.mu1.data(), n);
            ate = compensated_mean(n, [&](Eigen::Index i) { return mu1[i] - mu0[i]; });
            oracle = Oracle{std::move(mu0), std::move(mu1), std::nullopt};
        }
        out.push_back({rep, Dataset(std::move(d), std::move(z), std::move(y), std::move(oracle)),
                       ate});
    }
    return out;
}

namespace {

void write_dataset_header(std::ostream& os, const Dataset& data) {
    os << "rep,treatment,y_factual";
    if (data.has_oracle()) os << ",mu0,mu1";
    for (Eigen::Index j = 0; j < data.p(); ++j) os << ",x" << (j + 1);
    os << '\n';
}

void write_dataset_rows(std::ostream& os, const Dataset& data, int rep) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        os << rep << ',' << (data.d()[i] > 0.5 ? 1 : 0) << ',' << format_exact(data.y()[i]);
        if (data.has_oracle()) {
            os << ',' << format_exact(data.oracle().mu0[i]) << ','
               << format_exact(data.oracle().mu1[i]);
        }
        for (Eigen::Index j = 0; j < data.p(); ++j) os << ',' << format_exact(data.z()(i, j));
        os << '\n';
    }
}

}  // namespace

void write_dataset_csv(const Dataset& data, const fs::path& path, int rep) {
    std::ostringstream os;
    write_dataset_header(os, data);
    write_dataset_rows(os, data, rep);
    write_atomically(path, os.str());
}

void write_replications_csv(const std::vector<SemiSyntheticReplication>& reps,
                            const fs::path& path) {
    if (reps.empty()) throw Error("no replications to write");
    const Dataset& first = reps.front().dataset;
    for (const auto& r : reps) {
        if (r.dataset.p() != first.p() || r.dataset.has_oracle() != first.has_oracle()) {
            throw Error("replications differ in layout");
        }
    }
    std::ostringstream os;
    write_dataset_header(os, first);
    for (const auto& r : reps) write_dataset_rows(os, r.dataset, r.rep);
    write_atomically(path, os.str());
}

fs::path replication_path(const fs::path& summary_path) {
    fs::path out = summary_path.parent_path() / summary_path.stem();
    out += ".reps.csv";
    return out;
}

void write_report_csv(const AggregateReport& report, const fs::path& path) {
    std::ostringstream summary;
    summary << kSummaryHeader << '\n';
    for (const CellSummary& c : report.cells) {
        summary << to_string(c.cell.scheme) << ',' << to_string(c.cell.loss) << ','
                << format_number(c.cell.lambda) << ',' << c.cell.folds << ','
                << format_number(c.rmse_ra) << ',' << format_number(c.rmse_rw) << ','
                << format_number(c.rmse_arw) << ',' << format_number(c.cov_imbalance) << ','
                << format_number(c.reg_imbalance) << '\n';
    }

    std::ostringstream reps;
    reps << kLongHeader << '\n';
    for (const ReplicationRow& r : report.rows) {
        const CellSpec& cell = report.cells.at(r.cell).cell;
        const EstimateResult& e = r.result;
        const std::pair<const char*, double> estimates[] = {
            {"ra", e.theta_ra}, {"rw", e.theta_rw}, {"arw", e.theta_arw}};
        for (const auto& [name, value] : estimates) {
            reps << r.rep << ',' << to_string(cell.scheme) << ',' << to_string(cell.loss) << ','
                 << format_number(cell.lambda) << ',' << cell.folds << ',' << name << ','
                 << format_number(value) << ',' << format_number(r.target) << ','
                 << format_number(value - r.target) << ','
                 << format_number(e.imbalance.covariate_rms) << ','
                 << format_number(e.imbalance.regressor_rms) << ',';
            if (e.neyman) {
                reps << format_number(e.neyman->ne) << ',' << format_number(e.neyman->noise)
                     << ',' << format_number(e.neyman->drift);
            } else {
                reps << ",,";
            }
            reps << '\n';
        }
    }

    write_atomically(replication_path(path), reps.str());
    write_atomically(path, summary.str());
}

std::vector<SummaryRecord> read_report_csv(const fs::path& path) {
    const Table t = read_table(path);
    const char* names[] = {"scheme",  "loss",     "lambda",        "crossfit",     "rmse_ra",
                           "rmse_rw", "rmse_arw", "cov_imbalance", "reg_imbalance"};
    std::size_t col[9];
    for (int k = 0; k < 9; ++k) col[k] = require_column(t, names[k], path);

    std::vector<SummaryRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SummaryRecord s;
        if (col[0] >= t.rows[r].size() || col[1] >= t.rows[r].size()) {
            throw Error(path.string() + ": row " + std::to_string(r + 1) + ": too few fields");
        }
        s.scheme = t.rows[r][col[0]];
        s.loss = t.rows[r][col[1]];
        s.lambda = cell_value(t, r, col[2], path);
        s.crossfit = static_cast<int>(cell_value(t, r, col[3], path));
        s.rmse_ra = cell_value(t, r, col[4], path);
        s.rmse_rw = cell_value(t, r, col[5], path);
        s.rmse_arw = cell_value(t, r, col[6], path);
        s.cov_imbalance = cell_value(t, r, col[7], path);
        s.reg_imbalance = cell_value(t, r, col[8], path);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace regbal
