#pragma once

// Command-line front end. run() is separate from main() so tests can drive it
// with captured streams.
//
// Exit codes: 0 complete run, 1 input error, 2 contradiction in a report.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ergokit/ergokit.hpp"

namespace ergokit::cli {

enum class Format { Text, Csv, JsonLines };

struct RunConfig {
    std::string command;
    std::string model_path;
    double budget = 1.0;
    std::optional<double> nu;
    std::optional<double> tol;
    Format format = Format::Text;
    std::string emit_curve;
    // gap / oracle
    std::optional<std::size_t> oracle_n;
    std::optional<double> cutoff;
    std::size_t n = 4096;
    std::string which;  // empty: l0 for gap, l1 for oracle
    // verify
    std::string y;
    double lambda = 0.0;
    std::string h = "0";
    std::size_t verify_n = 1000;
};

namespace detail {

inline std::string kind_of(const Model& m) {
    return std::holds_alternative<BirthDeathModel>(m) ? "birth-death" : "diffusion";
}

inline const std::string& name_of(const Model& m) {
    return std::visit([](const auto& x) -> const std::string& { return x.name; }, m);
}

inline Budget budget_of(const RunConfig& c) { return Budget::from_env().scaled(c.budget); }

inline std::unique_ptr<DiffusionAnalysis> analysis_of(const DiffusionModel& m, const RunConfig& c) {
    DiffusionGrid g = DiffusionGrid::from_budget(budget_of(c));
    if (c.tol) {
        if (!(*c.tol > 0.0)) throw InvalidArgument("--tol must be positive");
        g.tol = *c.tol;
    }
    return std::make_unique<DiffusionAnalysis>(m, g);
}

inline nlohmann::json number_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline void write_jsonl(std::ostream& os, const std::vector<ReportRow>& rows) {
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["property"] = r.property;
        j["outcome"] = std::string(to_string(r.outcome));
        if (r.quantity) j["quantity"] = *r.quantity;
        j["probes"] = nlohmann::json::array();
        for (const auto& p : r.probes)
            j["probes"].push_back(
                {{"h", p.horizon}, {"value", number_or_null(p.value())}, {"log_value", number_or_null(p.log_value)}});
        j["flags"] = r.flags;
        j["reason"] = std::string(to_string(r.reason));
        if (!r.note.empty()) j["note"] = r.note;
        os << j.dump() << '\n';
    }
}

inline void write_rows(std::ostream& os, const std::vector<ReportRow>& rows, Format f) {
    switch (f) {
        case Format::Csv: write_csv(os, rows); break;
        case Format::JsonLines: write_jsonl(os, rows); break;
        default: write_text(os, rows);
    }
}

inline std::set<std::size_t> parse_index_set(const std::string& s) {
    std::set<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = ergokit::detail::trim(item);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc{} || p != t.data() + t.size())
            throw InvalidArgument("--H expects comma-separated indices, got '" + s + "'");
        out.insert(v);
    }
    if (out.empty()) throw InvalidArgument("--H must not be empty");
    return out;
}

inline int cmd_classify(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const Model model = load_model(c.model_path);
    std::vector<ReportRow> rows;
    std::vector<std::string> notes;
    bool consistent = true;
    std::vector<std::pair<Property, Property>> bad;
    const bool diffusion = std::holds_alternative<DiffusionModel>(model);
    if (!diffusion) {
        MuLadder L(std::get<BirthDeathModel>(model), budget_of(c));
        const ClassificationReport rep = classify(L, c.nu);
        rows = report_rows(rep.rows, false);
        notes = rep.notes;
        consistent = rep.consistent();
        bad = rep.contradictions;
    } else {
        auto A = analysis_of(std::get<DiffusionModel>(model), c);
        const DiffusionReport rep = criteria_diff(*A, c.nu);
        rows = report_rows(rep.rows, true);
        notes = rep.notes;
        consistent = rep.consistent();
        bad = rep.contradictions;
    }
    if (c.format == Format::Text) {
        out << "# ergokit " << kVersion << " classify " << name_of(model) << " (" << kind_of(model) << ")\n";
        write_text(out, rows);
        for (const auto& n : notes) out << "note: " << n << '\n';
    } else {
        write_rows(out, rows, c.format);
    }
    if (!c.emit_curve.empty()) {
        std::ofstream f(c.emit_curve);
        if (!f) throw InvalidArgument("cannot write curve file '" + c.emit_curve + "'");
        write_curve(f, rows);
    }
    if (!consistent) {
        for (auto [s, w] : bad)
            err << "contradiction: " << property_name(s, diffusion) << " holds but " << property_name(w, diffusion)
                << " fails\n";
        return 2;
    }
    return 0;
}

inline GapRow gap_row(const Model& model, const RunConfig& c) {
    GapRow r{name_of(model), kind_of(model), {}};
    if (const auto* m = std::get_if<BirthDeathModel>(&model)) {
        MuLadder L(*m, budget_of(c));
        r.gap = gap_bounds_bd(L);
        if (r.gap.status == GapStatus::Finite) {
            const VariationalBound v = representative_lower_bd(L);
            if (!v.vacuous) r.gap.variational_lower = v.value;
        }
        if (c.oracle_n) {
            const bool l0 = c.which == "l0";
            const OracleResult o =
                truncated_gap_oracle(*m, *c.oracle_n, l0 ? Boundary::Absorbing : Boundary::Reflecting);
            r.gap.oracle_value = o.value;
            r.gap.oracle_error = o.error;
            r.gap.oracle_size = o.size;
            r.gap.notes.push_back(l0 ? "oracle: lambda_0 of the absorbing truncation"
                                     : "oracle: lambda_1 of the reflecting truncation");
        }
    } else {
        auto A = analysis_of(std::get<DiffusionModel>(model), c);
        r.gap = gap_bounds_diff(*A, Gap::Lambda0);
        if (r.gap.status == GapStatus::Finite && A->mass().holds()) {
            const DiffVariationalBound v = representative_lower_diff(*A);
            if (!v.vacuous) r.gap.variational_lower = v.value;
        }
        if (c.oracle_n) {
            const double L = c.cutoff ? *c.cutoff : oracle_cutoff(*A);
            const bool l0 = c.which == "l0";
            const OracleResult o = fd_gap_oracle(*A, L, *c.oracle_n, l0 ? Gap::Lambda0 : Gap::Lambda1);
            r.gap.oracle_value = o.value;
            r.gap.oracle_error = o.error;
            r.gap.oracle_size = o.size;
            r.gap.notes.push_back(std::string("oracle: ") + (l0 ? "lambda_0" : "lambda_1") +
                                  " by finite differences on [0, " + format_number(L) + "]");
        }
    }
    return r;
}

inline int cmd_gap(RunConfig c, std::ostream& out) {
    if (c.which.empty()) c.which = "l0";
    if (c.which != "l0" && c.which != "l1") throw InvalidArgument("--which must be l0 or l1");
    const Model model = load_model(c.model_path);
    const GapRow r = gap_row(model, c);
    switch (c.format) {
        case Format::Csv: write_gap_csv(out, {r}); break;
        case Format::JsonLines: {
            nlohmann::ordered_json j;
            j["model"] = r.model;
            j["kind"] = r.kind;
            j["status"] = std::string(to_string(r.gap.status));
            j["delta"] = number_or_null(r.gap.delta);
            j["lower"] = number_or_null(r.gap.lower);
            j["upper"] = number_or_null(r.gap.upper);
            if (r.gap.variational_lower) j["var_lower"] = *r.gap.variational_lower;
            if (r.gap.oracle_value) j["oracle"] = *r.gap.oracle_value;
            if (r.gap.oracle_error) j["oracle_err"] = *r.gap.oracle_error;
            j["notes"] = r.gap.notes;
            out << j.dump() << '\n';
            break;
        }
        default:
            out << "# ergokit " << kVersion << " gap " << r.model << " (" << r.kind << ")\n";
            write_gap_text(out, r);
    }
    return 0;
}

inline int cmd_verify(const RunConfig& c, std::ostream& out) {
    const Model model = load_model(c.model_path);
    const auto* m = std::get_if<BirthDeathModel>(&model);
    if (!m) throw InvalidArgument("verify needs a birth-death model");
    const RateExpression y = RateExpression::parse(c.y, "n");
    const auto H = parse_index_set(c.h);
    const TestSequenceCheck chk =
        verify_test_sequence(*m, [&y](std::size_t i) { return y(static_cast<double>(i)); }, c.lambda, H, c.verify_n);
    std::size_t worst = 0;
    double worst_r = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < chk.residuals.size(); ++i)
        if (!std::isnan(chk.residuals[i]) && chk.residuals[i] > worst_r) {
            worst_r = chk.residuals[i];
            worst = i;
        }
    if (c.format == Format::JsonLines) {
        nlohmann::ordered_json j;
        j["outcome"] = std::string(to_string(chk.verdict.outcome));
        j["horizon"] = chk.horizon;
        j["max_residual"] = number_or_null(chk.max_residual);
        j["max_abs_residual"] = chk.max_abs_residual;
        j["worst_index"] = worst;
        if (chk.first_violation) j["first_violation"] = *chk.first_violation;
        j["note"] = chk.verdict.note;
        out << j.dump() << '\n';
        return 0;
    }
    out << "# ergokit " << kVersion << " verify " << m->name << '\n';
    out << "outcome           " << to_string(chk.verdict.outcome) << '\n';
    out << "horizon           " << chk.horizon << '\n';
    out << "worst_index       " << worst << '\n';
    out << "worst_residual    " << format_number(worst_r) << '\n';
    out << "max_abs_residual  " << format_number(chk.max_abs_residual) << '\n';
    if (chk.first_violation) out << "first_violation   " << *chk.first_violation << '\n';
    out << "note              " << chk.verdict.note << '\n';
    return 0;
}

inline int cmd_oracle(RunConfig c, std::ostream& out) {
    if (c.which.empty()) c.which = "l1";
    const Model model = load_model(c.model_path);
    if (c.which != "l0" && c.which != "l1") throw InvalidArgument("--which must be l0 or l1");
    OracleResult o;
    std::string detail;
    if (const auto* m = std::get_if<BirthDeathModel>(&model)) {
        o = truncated_gap_oracle(*m, c.n, c.which == "l0" ? Boundary::Absorbing : Boundary::Reflecting);
        detail = c.which == "l0" ? "absorbing truncation" : "reflecting truncation";
    } else {
        auto A = analysis_of(std::get<DiffusionModel>(model), c);
        const double L = c.cutoff ? *c.cutoff : oracle_cutoff(*A);
        o = fd_gap_oracle(*A, L, c.n, c.which == "l0" ? Gap::Lambda0 : Gap::Lambda1);
        detail = "finite differences on [0, " + format_number(L) + "]";
    }
    switch (c.format) {
        case Format::Csv:
            out << "model,kind,which,size,value,error\n"
                << csv_field(name_of(model)) << ',' << kind_of(model) << ',' << c.which << ',' << o.size << ','
                << format_number(o.value) << ',' << format_number(o.error) << '\n';
            break;
        case Format::JsonLines: {
            nlohmann::ordered_json j;
            j["model"] = name_of(model);
            j["kind"] = kind_of(model);
            j["which"] = c.which;
            j["size"] = o.size;
            j["value"] = o.value;
            j["error"] = o.error;
            out << j.dump() << '\n';
            break;
        }
        default:
            out << "# ergokit " << kVersion << " oracle " << name_of(model) << " (" << kind_of(model) << ")\n";
            out << "which   " << c.which << "  (" << detail << ")\n";
            out << "size    " << o.size << '\n';
            out << "value   " << format_number(o.value) << '\n';
            out << "error   " << format_number(o.error) << '\n';
    }
    return 0;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{std::string("ergokit ") + kVersion +
                 ": ergodicity and spectral-gap criteria for birth-death chains and 1-d diffusions"};
    app.set_version_flag("--version", std::string("ergokit ") + kVersion);
    app.require_subcommand(1);
    RunConfig c;
    std::string format = "text";

    auto common = [&](CLI::App* s) {
        s->add_option("model", c.model_path, "model file")->required();
        s->add_option("--budget", c.budget, "probe budget multiplier (default 1)")->check(CLI::PositiveNumber);
        s->add_option("--format", format, "text|csv|jsonl (default text)")
            ->check(CLI::IsMember({"text", "csv", "jsonl"}));
        s->add_option("--tol", c.tol, "diffusion quadrature tolerance (default 1e-11)");
    };

    auto* classify_cmd = app.add_subcommand("classify", "criteria table for a model");
    common(classify_cmd);
    classify_cmd->add_option("--nu", c.nu, "dimension parameter for the Nash row (omitted: no Nash row)");
    classify_cmd->add_option("--emit-curve", c.emit_curve, "write (property, x, value) probes as CSV to this file");

    auto* gap_cmd = app.add_subcommand("gap", "delta bracket, variational lower bound, optional oracle");
    common(gap_cmd);
    gap_cmd->add_option("--oracle", c.oracle_n, "truncation size for the oracle eigenvalue");
    gap_cmd->add_option("--L", c.cutoff, "diffusion cutoff (default: automatic)");
    gap_cmd->add_option("--which", c.which, "oracle eigenvalue: l0 (default, the bracketed one) or l1");

    auto* verify_cmd = app.add_subcommand("verify", "check a test sequence against the drift inequalities");
    common(verify_cmd);
    verify_cmd->add_option("--y", c.y, "test sequence, expression in n")->required();
    verify_cmd->add_option("--lambda", c.lambda, "rate lambda (0: ergodicity system)")->required();
    verify_cmd->add_option("--H", c.h, "finite set H, comma-separated (default 0)");
    verify_cmd->add_option("--N", c.verify_n, "last index checked (default 1000)");

    auto* oracle_cmd = app.add_subcommand("oracle", "eigenvalue of a truncated model");
    common(oracle_cmd);
    oracle_cmd->add_option("--N", c.n, "truncation size (default 4096)");
    oracle_cmd->add_option("--which", c.which, "l0 (absorbing at 0) or l1 (reflecting, default)");
    oracle_cmd->add_option("--L", c.cutoff, "diffusion cutoff (default: automatic)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    c.format = format == "csv" ? Format::Csv : format == "jsonl" ? Format::JsonLines : Format::Text;
    try {
        if (*classify_cmd) return detail::cmd_classify(c, out, err);
        if (*gap_cmd) return detail::cmd_gap(c, out);
        if (*verify_cmd) return detail::cmd_verify(c, out);
        if (*oracle_cmd) return detail::cmd_oracle(c, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace ergokit::cli
