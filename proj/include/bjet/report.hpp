#pragma once

#include "bjet/model_kernels.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace bjet::report {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "bjet 0.1.0";

/** One CSV line: p,quantity,value,target,ratio,notes. `notes` carries the provenance. */
struct Row {
    int p = 0;
    std::string quantity;
    double value = 0;
    double target = std::nan("");
    double ratio = std::nan("");
    std::string notes;
};

inline Row make_row(int p, std::string quantity, double value, double target, std::string notes)
{
    Row r{p, std::move(quantity), value, target, std::nan(""), std::move(notes)};
    if (std::isfinite(target) && target != 0) r.ratio = value / target;
    return r;
}

struct Criterion {
    int id = 0;
    std::string name;
    bool passed = false;
    bool qualitative = false;
    std::string summary;
};

struct Report {
    std::string command;
    json config = json::object();
    std::vector<Row> rows;
    json fits = json::object();
    std::vector<Criterion> criteria;

    bool passed() const
    {
        for (auto& c : criteria)
            if (!c.passed) return false;
        return true;
    }
};

inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

/** Comment lines with version and config, then the fixed header and the rows. */
inline std::string to_csv(const Report& r)
{
    std::string s = "# " + std::string(kVersion) + " " + r.command + "\n";
    s += "# config " + r.config.dump() + "\n";
    s += "p,quantity,value,target,ratio,notes\n";
    for (auto& row : r.rows)
        s += std::to_string(row.p) + "," + csv_field(row.quantity) + "," + format_number(row.value) + "," +
             format_number(row.target) + "," + format_number(row.ratio) + "," + csv_field(row.notes) + "\n";
    return s;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Report& r)
{
    json j;
    j["version"] = kVersion;
    j["command"] = r.command;
    j["config"] = r.config;
    json rows = json::array();
    for (auto& row : r.rows)
        rows.push_back({{"p", row.p},
                        {"quantity", row.quantity},
                        {"value", number_or_null(row.value)},
                        {"target", number_or_null(row.target)},
                        {"ratio", number_or_null(row.ratio)},
                        {"notes", row.notes}});
    j["rows"] = rows;
    j["fits"] = r.fits;
    json cr = json::array();
    for (auto& c : r.criteria)
        cr.push_back({{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"qualitative", c.qualitative}, {"summary", c.summary}});
    j["criteria"] = cr;
    return j;
}

inline std::string criterion_line(const Criterion& c)
{
    std::string s = "CRITERION " + std::to_string(c.id) + " " + (c.passed ? "PASS" : "FAIL");
    if (c.qualitative) s += " (qualitative)";
    return s + ": " + c.name + " - " + c.summary;
}

/** Exact kernel as JSON: base tag, index labels and pretty-printed amplitudes. */
inline json kernel_to_json(const JetKernel& k)
{
    json j;
    j["base"] = k.base().tag();
    json rows = json::array(), cols = json::array(), amps = json::array();
    for (std::size_t i = 0; i < k.nrows(); ++i) rows.push_back(k.rows().label(i));
    for (std::size_t c = 0; c < k.ncols(); ++c) cols.push_back(k.cols().label(c));
    for (std::size_t i = 0; i < k.nrows(); ++i) {
        json line = json::array();
        for (std::size_t c = 0; c < k.ncols(); ++c) line.push_back(k.amp(i, c).pretty());
        amps.push_back(line);
    }
    j["rows"] = rows;
    j["cols"] = cols;
    j["amplitudes"] = amps;
    j["degree"] = k.degree();
    return j;
}

} // namespace bjet::report
