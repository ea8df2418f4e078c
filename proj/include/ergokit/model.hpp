#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include "ergokit/errors.hpp"
#include "ergokit/expression.hpp"

namespace ergokit {

/// Birth-death chain on {0,1,2,...}: i -> i+1 at rate b_i, i -> i-1 at rate a_i.
///
/// b_0 is a separate scalar since families like b_i = i^g vanish at 0.
/// Overrides take precedence over the expressions; an overridden index is
/// never evaluated through the expression.
struct BirthDeathModel {
    double b0 = 1.0;
    RateExpression birth;  // b_i, i >= 1
    RateExpression death;  // a_i, i >= 1
    std::map<std::size_t, double> birth_override;
    std::map<std::size_t, double> death_override;
    std::string name;

    /// log b_i; throws ModelError if b_i is not positive.
    double log_birth(std::size_t i) const {
        if (auto it = birth_override.find(i); it != birth_override.end()) return positive_log(it->second, "birth", i);
        if (i == 0) return positive_log(b0, "birth", 0);
        return eval_log(birth, "birth", i);
    }

    /// log a_i for i >= 1; throws ModelError if a_i is not positive.
    double log_death(std::size_t i) const {
        if (i == 0) throw InvalidArgument("death rate a_0 is not defined");
        if (auto it = death_override.find(i); it != death_override.end()) return positive_log(it->second, "death", i);
        return eval_log(death, "death", i);
    }

    /// Linear-domain rates, evaluated directly when representable (+inf otherwise).
    double birth_rate(std::size_t i) const {
        const double l = log_birth(i);
        if (auto it = birth_override.find(i); it != birth_override.end()) return it->second;
        if (i == 0) return b0;
        return direct(birth, i, l);
    }
    double death_rate(std::size_t i) const {
        const double l = log_death(i);
        if (auto it = death_override.find(i); it != death_override.end()) return it->second;
        return direct(death, i, l);
    }

    /// Probes positivity at i = 0..upto.
    void validate(std::size_t upto = 64) const {
        for (std::size_t i = 0; i <= upto; ++i) {
            log_birth(i);
            if (i >= 1) log_death(i);
        }
    }

private:
    static double direct(const RateExpression& e, std::size_t i, double log_value) {
        try {
            double v = e(static_cast<double>(i));
            if (v > 0.0 && std::isfinite(v)) return v;
        } catch (const DomainError&) {
        }
        return std::exp(log_value);
    }
    static double positive_log(double v, const char* what, std::size_t i) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ModelError(std::string(what) + " rate nonpositive at i=" + std::to_string(i));
        return std::log(v);
    }
    static double eval_log(const RateExpression& e, const char* what, std::size_t i) {
        SignedLog s;
        try {
            s = e.signed_log(static_cast<double>(i));
        } catch (const DomainError& err) {
            throw ModelError(std::string(what) + " rate undefined at i=" + std::to_string(i) + ": " + err.what());
        }
        if (s.sign <= 0 || !std::isfinite(s.log_abs))
            throw ModelError(std::string(what) + " rate nonpositive at i=" + std::to_string(i));
        return s.log_abs;
    }
};

/// Diffusion L = a(x) d^2/dx^2 + b(x) d/dx on [0, inf).
struct DiffusionModel {
    RateExpression a;  // diffusion coefficient, must be > 0
    RateExpression b;  // drift
    std::string name;

    double diffusion(double x) const {
        double v = 0.0;
        try {
            v = a(x);
        } catch (const DomainError& err) {
            throw ModelError("diffusion coefficient undefined at x=" + fmt(x) + ": " + err.what());
        }
        if (!(v > 0.0)) throw ModelError("diffusion coefficient nonpositive at x=" + fmt(x));
        return v;
    }

    double drift(double x) const {
        try {
            return b(x);
        } catch (const DomainError& err) {
            throw ModelError("drift undefined at x=" + fmt(x) + ": " + err.what());
        }
    }

    /// Probes a > 0 and finite drift on a log-spaced grid in (0, 1e3].
    void validate() const {
        for (int k = 0; k <= 6 * 16; ++k) {
            double x = std::pow(10.0, -3.0 + k / 16.0);
            diffusion(x);
            drift(x);
        }
    }

    /// True when b evaluates to exactly zero on the probe grid.
    bool driftless() const {
        for (int k = 0; k <= 9 * 8; ++k) {
            double x = std::pow(10.0, -3.0 + k / 8.0);
            if (drift(x) != 0.0) return false;
        }
        return drift(0.0) == 0.0;
    }

private:
    static std::string fmt(double x) {
        std::ostringstream os;
        os << x;
        return os.str();
    }
};

using Model = std::variant<BirthDeathModel, DiffusionModel>;

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::string unquote(const std::string& v, int line) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    if (!v.empty() && (v.front() == '"' || v.back() == '"'))
        throw ModelError("line " + std::to_string(line) + ": unbalanced quote");
    return v;
}

inline double parse_decimal(const std::string& v, int line, const std::string& key) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw ModelError("line " + std::to_string(line) + ": '" + key + "' expects a number, got '" + v + "'");
    return out;
}

}  // namespace detail

/// Parses model-file text (`key = value` per line, `#` comments).
inline Model parse_model(std::string_view text, std::string name = "model") {
    std::map<std::string, std::pair<std::string, int>> kv;
    std::map<std::size_t, std::pair<double, int>> a_over, b_over;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        // strip comments that are not inside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '"') quoted = !quoted;
            if (raw[i] == '#' && !quoted) {
                raw.resize(i);
                break;
            }
        }
        std::string s = detail::trim(raw);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ModelError("line " + std::to_string(line) + ": expected 'key = value'");
        std::string key = detail::trim(s.substr(0, eq));
        std::string val = detail::unquote(detail::trim(s.substr(eq + 1)), line);
        if (key.empty()) throw ModelError("line " + std::to_string(line) + ": empty key");

        if (key.size() > 3 && (key[0] == 'a' || key[0] == 'b') && key[1] == '[' && key.back() == ']') {
            std::string idx = key.substr(2, key.size() - 3);
            std::size_t k = 0;
            auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), k);
            if (ec != std::errc() || ptr != idx.data() + idx.size())
                throw ModelError("line " + std::to_string(line) + ": bad override index '" + idx + "'");
            double v = detail::parse_decimal(val, line, key);
            auto& target = key[0] == 'a' ? a_over : b_over;
            if (key[0] == 'a' && k == 0) throw ModelError("line " + std::to_string(line) + ": a[0] is not defined");
            if (key[0] == 'b' && k == 0) throw ModelError("line " + std::to_string(line) + ": use 'b0' for the rate at 0");
            target[k] = {v, line};
            continue;
        }
        if (key != "kind" && key != "a" && key != "b" && key != "b0")
            throw ModelError("line " + std::to_string(line) + ": unknown key '" + key + "'");
        if (kv.count(key)) throw ModelError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
        kv[key] = {val, line};
    }

    auto require = [&](const char* k) -> const std::pair<std::string, int>& {
        auto it = kv.find(k);
        if (it == kv.end()) throw ModelError(std::string("missing required key '") + k + "'");
        return it->second;
    };
    auto expr = [&](const char* k, const char* var) {
        const auto& [v, ln] = require(k);
        try {
            return RateExpression::parse(v, var);
        } catch (const ParseError& e) {
            throw ModelError("line " + std::to_string(ln) + ": " + e.what());
        }
    };

    const auto& [kind, kind_line] = require("kind");
    if (kind == "birth-death") {
        BirthDeathModel m;
        m.name = name;
        const auto& [b0s, b0line] = require("b0");
        m.b0 = detail::parse_decimal(b0s, b0line, "b0");
        if (!(m.b0 > 0.0)) throw ModelError("line " + std::to_string(b0line) + ": b0 must be positive");
        m.birth = expr("b", "n");
        m.death = expr("a", "n");
        for (auto& [k, v] : a_over) m.death_override[k] = v.first;
        for (auto& [k, v] : b_over) m.birth_override[k] = v.first;
        m.validate(64);
        return m;
    }
    if (kind == "diffusion") {
        if (kv.count("b0") || !a_over.empty() || !b_over.empty())
            throw ModelError("line " + std::to_string(kind_line) + ": chain-only keys in a diffusion model");
        DiffusionModel m;
        m.name = name;
        m.a = expr("a", "x");
        m.b = expr("b", "x");
        m.validate();
        return m;
    }
    throw ModelError("line " + std::to_string(kind_line) + ": unknown kind '" + kind + "'");
}

/// Reads and validates a model file.
inline Model load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ModelError("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
    if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
    return parse_model(ss.str(), stem);
}

/// Convenience constructors used by tests and the corpus.
inline BirthDeathModel make_chain(double b0, std::string_view birth, std::string_view death, std::string name = "chain") {
    BirthDeathModel m;
    m.b0 = b0;
    m.birth = RateExpression::parse(birth, "n");
    m.death = RateExpression::parse(death, "n");
    m.name = std::move(name);
    return m;
}

inline DiffusionModel make_diffusion(std::string_view a, std::string_view b, std::string name = "diffusion") {
    DiffusionModel m;
    m.a = RateExpression::parse(a, "x");
    m.b = RateExpression::parse(b, "x");
    m.name = std::move(name);
    return m;
}

}  // namespace ergokit
