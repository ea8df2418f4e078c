#pragma once

// Plain-text and CSV rendering of verdict tables. Numbers are printed with
// %.10g so output is byte-identical across runs.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ergokit/bd_spectral.hpp"
#include "ergokit/lattice.hpp"
#include "ergokit/verdict.hpp"

namespace ergokit {

inline constexpr const char* kVersion = "1.0.0";

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

struct ReportRow {
    std::string property;
    Outcome outcome = Outcome::Inconclusive;
    Reason reason = Reason::BudgetExhausted;
    std::optional<double> quantity;
    std::vector<Probe> probes;
    std::vector<std::string> flags;
    std::string note;
};

inline std::vector<ReportRow> report_rows(const VerdictTable& t, bool diffusion) {
    std::vector<ReportRow> out;
    for (Property p : kAllProperties) {
        const auto& v = row(t, p);
        if (!v) continue;
        ReportRow r;
        r.property = std::string(property_name(p, diffusion));
        r.outcome = v->outcome;
        r.reason = v->reason;
        if (v->outcome != Outcome::Fails) r.quantity = v->quantity();
        r.probes = v->probes;
        r.flags = v->flags;
        r.note = v->note;
        out.push_back(std::move(r));
    }
    return out;
}

/// The last `count` probes as "h:value" pairs separated by spaces.
inline std::string probe_summary(const std::vector<Probe>& probes, std::size_t count = 3) {
    std::string s;
    const std::size_t first = probes.size() > count ? probes.size() - count : 0;
    for (std::size_t i = first; i < probes.size(); ++i) {
        if (!s.empty()) s += ' ';
        s += format_number(probes[i].horizon) + ":" + format_number(probes[i].value());
    }
    return s;
}

inline std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string s;
    for (const auto& x : v) {
        if (!s.empty()) s += sep;
        s += x;
    }
    return s;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

inline void write_text(std::ostream& os, const std::vector<ReportRow>& rows) {
    std::size_t w = 8;
    for (const auto& r : rows) w = std::max(w, r.property.size());
    for (const auto& r : rows) {
        std::string line = r.property + std::string(w + 2 - r.property.size(), ' ');
        std::string verdict(to_string(r.outcome));
        line += verdict + std::string(14 - std::min<std::size_t>(13, verdict.size()), ' ');
        std::string q = r.quantity ? format_number(*r.quantity) : "-";
        line += q + std::string(18 - std::min<std::size_t>(17, q.size()), ' ');
        line += std::string(to_string(r.reason));
        if (!r.flags.empty()) line += "  [" + join(r.flags, "; ") + "]";
        if (!r.note.empty()) line += "  " + r.note;
        os << line << '\n';
        if (!r.probes.empty()) os << std::string(w + 2, ' ') << "probes " << probe_summary(r.probes) << '\n';
    }
}

inline void write_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
    os << "property,outcome,reason,quantity,probes,flags,note\n";
    for (const auto& r : rows) {
        os << csv_field(r.property) << ',' << to_string(r.outcome) << ',' << to_string(r.reason) << ','
           << format_optional(r.quantity) << ',' << csv_field(probe_summary(r.probes)) << ','
           << csv_field(join(r.flags, "; ")) << ',' << csv_field(r.note) << '\n';
    }
}

/// (property, x, value) for every probe of every row.
inline void write_curve(std::ostream& os, const std::vector<ReportRow>& rows) {
    os << "property,x,value\n";
    for (const auto& r : rows)
        for (const auto& p : r.probes)
            os << r.property << ',' << format_number(p.horizon) << ',' << format_number(p.value()) << '\n';
}

/// One row of the gap table.
struct GapRow {
    std::string model;
    std::string kind;
    GapEstimate gap;
};

inline void write_gap_csv(std::ostream& os, const std::vector<GapRow>& rows) {
    os << "model,kind,delta,lower,upper,var_lower,oracle,oracle_err\n";
    for (const auto& r : rows) {
        const GapEstimate& g = r.gap;
        os << csv_field(r.model) << ',' << r.kind << ',' << format_number(g.delta) << ',' << format_number(g.lower)
           << ',' << format_number(g.upper) << ',' << format_optional(g.variational_lower) << ','
           << format_optional(g.oracle_value) << ',' << format_optional(g.oracle_error) << '\n';
    }
}

inline void write_gap_text(std::ostream& os, const GapRow& r) {
    const GapEstimate& g = r.gap;
    os << "status      " << to_string(g.status) << '\n';
    os << "delta       " << format_number(g.delta) << '\n';
    os << "lower       " << format_number(g.lower) << "  (4 delta)^-1\n";
    os << "upper       " << format_number(g.upper) << "  delta^-1\n";
    if (g.variational_lower) os << "var_lower   " << format_number(*g.variational_lower) << '\n';
    if (g.oracle_value) {
        os << "oracle      " << format_number(*g.oracle_value) << "  (size " << g.oracle_size << ")\n";
        os << "oracle_err  " << format_optional(g.oracle_error) << '\n';
    }
    for (const auto& n : g.notes) os << "note        " << n << '\n';
}

}  // namespace ergokit
