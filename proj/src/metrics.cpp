// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "marginlab/error.hpp"
#include "marginlab/harness.hpp"

namespace marginlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append(std::string& out, const std::optional<double>& v) {
    if (v) append(out, *v);
}

std::vector<std::string_view> split_commas(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(',', start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::string metrics_header(const std::vector<NormSpec>& track) {
    std::string h = "t,eta,loss,proxy,proxy_loss_ratio";
    for (const auto& s : track) h += ",dualnorm_" + s.name();
    h += ",margin";
    for (const char* prefix : {"normmargin_", "gap_", "corr_"})
        for (const auto& s : track) h += "," + std::string(prefix) + s.name();
    h += ",mom_gap_sum,adam_ratio_max";
    return h;
}

std::string metrics_row(const MetricsRecord& rec) {
    std::string r = std::to_string(rec.t);
    for (double v : {rec.eta, rec.loss, rec.proxy}) {
        r += ',';
        append(r, v);
    }
    r += ',';
    append(r, rec.proxy_loss_ratio);
    for (double v : rec.dual_norm) {
        r += ',';
        append(r, v);
    }
    r += ',';
    append(r, rec.margin);
    for (const auto* group : {&rec.normalized_margin, &rec.gap, &rec.correlation}) {
        for (const auto& v : *group) {
            r += ',';
            append(r, v);
        }
    }
    r += ',';
    append(r, rec.mom_gap_sum);
    r += ',';
    append(r, rec.adam_ratio_max);
    return r;
}

std::size_t MetricsTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw Error(ErrorCode::invalid_argument, "metrics log has no column '" + name + "'");
}

std::vector<double> MetricsTable::column(const std::string& name) const {
    const std::size_t c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
}

MetricsTable to_table(const std::vector<MetricsRecord>& records, const std::vector<NormSpec>& track) {
    return parse_metrics_csv([&] {
        std::string text = metrics_header(track) + "\n";
        for (const auto& rec : records) text += metrics_row(rec) + "\n";
        return text;
    }());
}

MetricsTable parse_metrics_csv(const std::string& text) {
    MetricsTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_commas(line);
        if (table.columns.empty()) {
            for (auto f : fields) table.columns.emplace_back(f);
            continue;
        }
        if (fields.size() != table.columns.size())
            throw Error(ErrorCode::parse_error, "metrics line " + std::to_string(line_no) + " has " +
                                                    std::to_string(fields.size()) + " cells, header has " +
                                                    std::to_string(table.columns.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (auto f : fields) {
            if (f.empty()) {
                row.push_back(kNaN);
                continue;
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw Error(ErrorCode::parse_error,
                            "metrics line " + std::to_string(line_no) + ": bad cell '" + std::string(f) + "'");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) throw Error(ErrorCode::parse_error, "metrics log has no header");
    return table;
}

MetricsTable read_metrics_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot open metrics log '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_metrics_csv(ss.str());
}

RateFit fit_rate(const MetricsTable& log, const std::string& column, double t_from, double t_to) {
    if (!(t_from > 0.0) || !(t_to >= t_from))
        throw Error(ErrorCode::invalid_argument, "rate fit needs 0 < from <= to");
    const auto t = log.column("t");
    const auto v = log.column(column);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= t_from && t[i] <= t_to)) continue;
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) continue;
        xs.push_back(std::log(t[i]));
        ys.push_back(std::log(v[i]));
    }
    if (xs.size() < 10)
        throw Error(ErrorCode::undefined_quantity, "rate fit of '" + column + "' has " + std::to_string(xs.size()) +
                                                       " positive points in range, needs 10");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::undefined_quantity, "rate fit needs at least two distinct t values");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    fit.points = xs.size();
    return fit;
}

}  // namespace marginlab
