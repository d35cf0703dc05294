#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "iclasso/datagen.hpp"
#include "iclasso/diagnostics.hpp"
#include "iclasso/errors.hpp"
#include "iclasso/experiment.hpp"
#include "iclasso/solver.hpp"
#include "iclasso/tuning.hpp"
#include "iclasso/types.hpp"

namespace iclasso {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw NumericError("cannot format double");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("cannot parse number '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset CSV: header y,x1,...,xp then one observation per line.
// ---------------------------------------------------------------------------

inline void write_dataset_csv(std::ostream& os, const Matrix& X, const Vector& y) {
    if (X.rows() != y.size()) throw ConfigError("X and y row counts differ");
    os << "y";
    for (Index j = 0; j < X.cols(); ++j) os << ",x" << (j + 1);
    os << '\n';
    for (Index i = 0; i < X.rows(); ++i) {
        os << format_double(y(i));
        for (Index j = 0; j < X.cols(); ++j) os << ',' << format_double(X(i, j));
        os << '\n';
    }
}

/// Reads X and y; beta0 and u are left empty.
inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("dataset CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.front() != "y") throw ConfigError("dataset CSV header must be y,x1,...,xp");
    for (std::size_t j = 1; j < header.size(); ++j)
        if (header[j] != "x" + std::to_string(j)) throw ConfigError("unexpected dataset column '" + std::string(header[j]) + "'");
    const Index p = static_cast<Index>(header.size() - 1);

    std::vector<double> values;
    Index n = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<Index>(fields.size()) != p + 1)
            throw ConfigError("dataset row " + std::to_string(n + 1) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(p + 1));
        for (auto f : fields) values.push_back(parse_double(f));
        ++n;
    }
    if (n == 0) throw ConfigError("dataset CSV has no rows");
    Dataset ds;
    ds.X.resize(n, p);
    ds.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const std::size_t base = static_cast<std::size_t>(i * (p + 1));
        ds.y(i) = values[base];
        for (Index j = 0; j < p; ++j) ds.X(i, j) = values[base + 1 + static_cast<std::size_t>(j)];
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Tuning grid CSV
// ---------------------------------------------------------------------------

inline void write_gic_csv(std::ostream& os, const GicSelection& sel) {
    os << "c2,lambda,sigma_hat_sq,s_hat,gic_score,selected\n";
    for (std::size_t k = 0; k < sel.scores.size(); ++k) {
        const auto& s = sel.scores[k];
        os << format_double(s.c2) << ',' << format_double(s.lambda) << ',' << format_double(s.sigma_hat_sq) << ','
           << s.s_hat << ',' << format_double(s.score) << ',' << (k == sel.index_star ? 1 : 0) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Experiment tables
// ---------------------------------------------------------------------------

enum class TableFormat { csv, json, text };

inline TableFormat parse_format(std::string_view s) {
    if (s == "csv") return TableFormat::csv;
    if (s == "json") return TableFormat::json;
    if (s == "text") return TableFormat::text;
    throw ConfigError("unknown output format '" + std::string(s) + "' (expected csv, json or text)");
}

inline nlohmann::json to_json(const ICCell& c) {
    return {{"estimator", std::string(to_string(c.estimator))},
            {"p", c.p},
            {"n", c.n},
            {"lie", c.lie},
            {"truth_mse", c.truth_mse},
            {"report_mse", c.report_mse},
            {"lambda_used", c.lambda_used},
            {"quad", c.quad},
            {"cross1", c.cross1},
            {"cross2", c.cross2},
            {"iterations", c.iterations},
            {"seed", c.seed}};
}

namespace detail {

inline void emit_text(std::ostream& os, const std::vector<ICCell>& cells) {
    // one Truth/Report grid per (estimator, lie): rows p, column pairs n
    std::vector<std::pair<Estimator, double>> blocks;
    std::vector<Index> ps, ns;
    for (const auto& c : cells) {
        if (std::find(blocks.begin(), blocks.end(), std::pair{c.estimator, c.lie}) == blocks.end())
            blocks.emplace_back(c.estimator, c.lie);
        if (std::find(ps.begin(), ps.end(), c.p) == ps.end()) ps.push_back(c.p);
        if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
    }
    auto find = [&](Estimator e, double lie, Index p, Index n) -> const ICCell* {
        for (const auto& c : cells)
            if (c.estimator == e && c.lie == lie && c.p == p && c.n == n) return &c;
        return nullptr;
    };
    bool first = true;
    for (const auto& [est, lie] : blocks) {
        if (!first) os << '\n';
        first = false;
        os << (est == Estimator::lasso ? "Lasso" : "Conservative Lasso") << " - Difference " << format_double(lie) << '\n';
        os << std::left << std::setw(10) << "Dimension";
        for (Index n : ns) os << " | " << std::setw(17) << ("n=" + std::to_string(n));
        os << '\n' << std::setw(10) << "";
        for (std::size_t k = 0; k < ns.size(); ++k) os << " | " << std::setw(8) << "Truth" << ' ' << std::setw(8) << "Report";
        os << '\n';
        for (Index p : ps) {
            os << std::setw(10) << ("p=" + std::to_string(p));
            for (Index n : ns) {
                const ICCell* c = find(est, lie, p, n);
                std::ostringstream t, r;
                t << std::fixed << std::setprecision(2);
                r << std::fixed << std::setprecision(2);
                if (c) {
                    t << c->truth_mse;
                    r << c->report_mse;
                } else {
                    t << "-";
                    r << "-";
                }
                os << " | " << std::setw(8) << t.str() << ' ' << std::setw(8) << r.str();
            }
            os << '\n';
        }
    }
    os << std::right;
}

} // namespace detail

inline void emit_table(std::ostream& os, const std::vector<ICCell>& cells, TableFormat format) {
    if (cells.empty()) throw ConfigError("no cells to emit");
    switch (format) {
    case TableFormat::csv:
        os << "estimator,p,n,lie,truth_mse,report_mse,lambda_used,quad,cross1,cross2,iterations,seed\n";
        for (const auto& c : cells)
            os << to_string(c.estimator) << ',' << c.p << ',' << c.n << ',' << format_double(c.lie) << ','
               << format_double(c.truth_mse) << ',' << format_double(c.report_mse) << ','
               << format_double(c.lambda_used) << ',' << format_double(c.quad) << ',' << format_double(c.cross1)
               << ',' << format_double(c.cross2) << ',' << c.iterations << ',' << c.seed << '\n';
        break;
    case TableFormat::json: {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : cells) arr.push_back(to_json(c));
        os << arr.dump(2) << '\n';
        break;
    }
    case TableFormat::text:
        detail::emit_text(os, cells);
        break;
    }
}

inline std::string emit_table(const std::vector<ICCell>& cells, TableFormat format) {
    std::ostringstream os;
    emit_table(os, cells, format);
    return os.str();
}

// ---------------------------------------------------------------------------
// Diagnostics records
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string config_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline std::string describe(const DgpConfig& c) {
    std::ostringstream os;
    os << "p=" << c.p << ";n=" << c.n << ";s0=" << c.s0 << ";rho=" << format_double(c.rho)
       << ";noise_sd=" << format_double(c.noise_sd);
    return os.str();
}

/// Record keyed by (module, op, config hash, seed) with the report under "result".
inline nlohmann::json diagnostics_record(std::string_view op, const std::string& config_text, std::uint64_t seed,
                                         nlohmann::json result) {
    return {{"module", "diagnostics"},
            {"op", std::string(op)},
            {"config", config_text},
            {"config_hash", config_hash(config_text)},
            {"seed", seed},
            {"result", std::move(result)}};
}

inline nlohmann::json to_json(const MaxStats& s) { return {{"m1", s.m1}, {"m2", s.m2}, {"m3", s.m3}, {"m4", s.m4}}; }

inline nlohmann::json to_json(const EventReport& e) {
    return {{"a1_holds", e.a1_holds},       {"a2_holds", e.a2_holds},
            {"noise_stat", e.noise_stat},   {"re_estimate", e.re_estimate},
            {"re_population", e.re_population}, {"error_direction_used", e.error_direction_used}};
}

inline nlohmann::json to_json(const MomentReport& m) {
    return {{"k", m.k},
            {"mean_l1_error_k", m.mean_l1_error_k},
            {"mean_l1_norm_k", m.mean_l1_norm_k},
            {"ratio_error", m.ratio_error},
            {"ratio_norm", m.ratio_norm},
            {"reps", m.reps}};
}

inline nlohmann::json to_json(const Fit& f) {
    std::vector<double> beta(f.beta_hat.data(), f.beta_hat.data() + f.beta_hat.size());
    std::vector<Index> support(f.support.begin(), f.support.end());
    for (auto& j : support) ++j;  // 1-indexed like the CSV columns
    return {{"lambda", f.lambda},     {"objective", f.objective}, {"sweeps", f.sweeps},
            {"converged", f.converged}, {"kkt_violation", f.kkt_violation}, {"support", support},
            {"beta_hat", beta}};
}

} // namespace iclasso
