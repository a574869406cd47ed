#pragma once
// Synthetic scenarios: ground-truth units instantiated from templates, one
// report per unit member, with mass jitter, optional widening of propositions
// to a nonspecific superset, and ambiguous decoys.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "forceagg/annealer.hpp"
#include "forceagg/errors.hpp"
#include "forceagg/evidence.hpp"
#include "forceagg/templates.hpp"

namespace forceagg {

struct ScenarioSpec {
    TypeUniverse universe;
    std::vector<Template> catalog;
    std::vector<std::string> units; // template name per ground-truth unit
    double mass_min = 0.6;
    double mass_max = 0.9;
    double nonspecific_prob = 0.0; // chance a member's proposition gains one extra type
    std::size_t decoys = 0;        // members widened by a type belonging to another unit
};

struct TruthUnit {
    std::string template_name;
    std::vector<std::string> members;
};

struct Scenario {
    TypeUniverse universe;
    std::vector<Template> catalog;
    std::vector<Report> reports;
    std::vector<TruthUnit> truth;
    std::vector<std::size_t> truth_of; // unit index per report
    std::vector<std::size_t> true_type; // universe index per report
    std::uint64_t seed = 0;
};

namespace detail {

inline const Template& find_template(std::span<const Template> catalog, const std::string& name) {
    auto it = std::find_if(catalog.begin(), catalog.end(), [&](const auto& t) { return t.name == name; });
    if (it == catalog.end())
        throw ValidationError("scenario unit names unknown template '" + name + "'");
    return *it;
}

inline std::size_t pick(NoiseSource& rng, std::size_t n) {
    return static_cast<std::size_t>(rng.next() * static_cast<double>(n));
}

} // namespace detail

inline Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    if (spec.units.empty())
        throw ValidationError("scenario needs at least one unit");
    if (!(spec.mass_min > 0.0) || spec.mass_max < spec.mass_min || spec.mass_max > kDefaultMassCap)
        throw ValidationError("scenario mass range must satisfy 0 < min <= max <= mass cap");
    if (!(spec.nonspecific_prob >= 0.0 && spec.nonspecific_prob <= 1.0))
        throw ValidationError("nonspecific probability must lie in [0, 1]");
    if (spec.universe.size() < 2 && (spec.nonspecific_prob > 0.0 || spec.decoys > 0))
        throw ValidationError("widening propositions needs at least two types");

    NoiseSource rng(seed);
    struct Member {
        std::size_t unit;
        std::size_t type;
        std::size_t ordinal;
    };
    std::vector<Member> members;
    std::vector<TypeMask> unit_types(spec.units.size(), 0);
    for (std::size_t u = 0; u < spec.units.size(); ++u) {
        const Template& t = detail::find_template(spec.catalog, spec.units[u]);
        std::size_t ordinal = 0;
        for (const auto& s : t.slots) {
            unit_types[u] |= TypeMask{1} << s.type;
            for (std::int64_t c = 0; c < s.count; ++c)
                members.push_back({u, s.type, ordinal++});
        }
    }

    std::vector<bool> is_decoy(members.size(), false);
    {
        std::vector<std::size_t> order(members.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        const std::size_t d = std::min(spec.decoys, members.size());
        for (std::size_t q = 0; q < d; ++q) {
            std::swap(order[q], order[q + detail::pick(rng, order.size() - q)]);
            is_decoy[order[q]] = true;
        }
    }

    const TypeMask full = spec.universe.full_mask();
    auto random_type_in = [&](TypeMask pool) {
        std::vector<std::size_t> choices;
        for (std::size_t b = 0; b < spec.universe.size(); ++b)
            if (pool & (TypeMask{1} << b))
                choices.push_back(b);
        return choices[detail::pick(rng, choices.size())];
    };

    Scenario sc{spec.universe, spec.catalog, {}, {}, {}, {}, seed};
    for (std::size_t u = 0; u < spec.units.size(); ++u)
        sc.truth.push_back({spec.units[u], {}});

    std::vector<Report> reports;
    std::vector<std::size_t> truth_of, true_type;
    for (std::size_t m = 0; m < members.size(); ++m) {
        const auto& mem = members[m];
        const TypeMask own = TypeMask{1} << mem.type;
        TypeMask mask = own;
        if (is_decoy[m]) {
            TypeMask foreign = 0;
            for (std::size_t u = 0; u < unit_types.size(); ++u)
                if (u != mem.unit)
                    foreign |= unit_types[u];
            foreign &= ~own;
            if (foreign == 0)
                foreign = full & ~own;
            mask |= TypeMask{1} << random_type_in(foreign);
        } else if (spec.nonspecific_prob > 0.0 && rng.next() < spec.nonspecific_prob) {
            mask |= TypeMask{1} << random_type_in(full & ~own);
        }
        const double mass = spec.mass_min + (spec.mass_max - spec.mass_min) * rng.next();
        std::string id = "u" + std::to_string(mem.unit) + "." + std::to_string(mem.ordinal);
        reports.push_back(make_report(id, Proposition::from_mask(spec.universe, mask), mass, 1));
        truth_of.push_back(mem.unit);
        true_type.push_back(mem.type);
    }

    // Shuffle report order so the sequential sweep order carries no truth.
    std::vector<std::size_t> perm(reports.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[detail::pick(rng, i)]);
    for (auto p : perm) {
        sc.truth[truth_of[p]].members.push_back(reports[p].id);
        sc.reports.push_back(reports[p]);
        sc.truth_of.push_back(truth_of[p]);
        sc.true_type.push_back(true_type[p]);
    }
    return sc;
}

} // namespace forceagg
