#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergokit/verdict.hpp"

namespace ergokit {

/// Properties in the order of the criteria tables; later rows are stronger,
/// except that LogSobolev and Strong are not comparable.
enum class Property : std::size_t {
    Uniqueness,
    Recurrence,
    Ergodicity,
    Exponential,  // Poincare inequality on the diffusion side
    DiscreteSpectrum,
    LogSobolev,
    Strong,
    Nash,
};

inline constexpr std::size_t kPropertyCount = 8;

inline constexpr std::array<Property, kPropertyCount> kAllProperties = {
    Property::Uniqueness, Property::Recurrence,  Property::Ergodicity, Property::Exponential,
    Property::DiscreteSpectrum, Property::LogSobolev, Property::Strong,     Property::Nash,
};

inline std::string_view property_name(Property p, bool diffusion = false) {
    switch (p) {
        case Property::Uniqueness: return "uniqueness";
        case Property::Recurrence: return "recurrence";
        case Property::Ergodicity: return "ergodicity";
        case Property::Exponential: return diffusion ? "poincare" : "exponential-ergodicity";
        case Property::DiscreteSpectrum: return "discrete-spectrum";
        case Property::LogSobolev: return "log-sobolev";
        case Property::Strong: return "strong-ergodicity";
        default: return "nash";
    }
}

/// Direct implications (stronger, weaker).
inline constexpr std::array<std::pair<Property, Property>, 8> kImplications = {{
    {Property::Recurrence, Property::Uniqueness},
    {Property::Ergodicity, Property::Recurrence},
    {Property::Exponential, Property::Ergodicity},
    {Property::DiscreteSpectrum, Property::Exponential},
    {Property::LogSobolev, Property::DiscreteSpectrum},
    {Property::Nash, Property::LogSobolev},
    {Property::Strong, Property::Exponential},
    {Property::Nash, Property::Strong},
}};

/// True when `strong` implies `weak` through the implication graph.
inline bool implies(Property strong, Property weak) {
    if (strong == weak) return true;
    for (auto [s, w] : kImplications)
        if (s == strong && implies(w, weak)) return true;
    return false;
}

using VerdictTable = std::array<std::optional<Verdict>, kPropertyCount>;

inline std::optional<Verdict>& row(VerdictTable& t, Property p) { return t[static_cast<std::size_t>(p)]; }
inline const std::optional<Verdict>& row(const VerdictTable& t, Property p) {
    return t[static_cast<std::size_t>(p)];
}

/// Pairs (stronger, weaker) where the stronger property Holds and the weaker Fails.
inline std::vector<std::pair<Property, Property>> contradictions(const VerdictTable& t) {
    std::vector<std::pair<Property, Property>> out;
    for (Property s : kAllProperties)
        for (Property w : kAllProperties) {
            if (s == w || !implies(s, w)) continue;
            const auto& vs = row(t, s);
            const auto& vw = row(t, w);
            if (vs && vw && vs->holds() && vw->fails()) out.emplace_back(s, w);
        }
    return out;
}

/// Resolves Inconclusive rows implied by decided ones: a Holds propagates to
/// every weaker property, a Fails to every stronger one. Returns false and
/// leaves the table untouched if it already contains a contradiction.
inline bool close_lattice(VerdictTable& t, bool diffusion = false) {
    if (!contradictions(t).empty()) return false;
    for (Property s : kAllProperties)
        for (Property w : kAllProperties) {
            if (s == w || !implies(s, w)) continue;
            auto& vs = row(t, s);
            auto& vw = row(t, w);
            if (!vs || !vw) continue;
            if (vs->holds() && vw->inconclusive()) {
                vw->outcome = Outcome::Holds;
                vw->reason = Reason::Implied;
                vw->note = "implied by " + std::string(property_name(s, diffusion));
            } else if (vw->fails() && vs->inconclusive()) {
                vs->outcome = Outcome::Fails;
                vs->reason = Reason::Implied;
                vs->note = "excluded by failure of " + std::string(property_name(w, diffusion));
            }
        }
    return true;
}

using RowTask = std::pair<Property, std::function<Verdict()>>;

/// Evaluates each row on its own thread and stores results by property, so the
/// table does not depend on completion order. Exceptions surface in row order.
inline VerdictTable evaluate_rows(const std::vector<RowTask>& tasks) {
    std::vector<std::future<Verdict>> pending;
    pending.reserve(tasks.size());
    for (const auto& t : tasks) pending.push_back(std::async(std::launch::async, t.second));
    VerdictTable table;
    for (std::size_t i = 0; i < tasks.size(); ++i) row(table, tasks[i].first) = pending[i].get();
    return table;
}

}  // namespace ergokit
