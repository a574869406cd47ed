#pragma once
// Templates and the support-function algebra over the nonempty subsets of
// the type universe:
//   ST  template support        SC  core support       AC  = ST - SC
//   SNC non-core support        NAC = max(0, SNC - AC)
// plus the degree of fit between a core and a template, template selection,
// and the basic belief / interaction penalizing non-core reports.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forceagg/errors.hpp"
#include "forceagg/evidence.hpp"
#include "forceagg/ratio.hpp"

namespace forceagg {

struct TemplateSlot {
    std::size_t type; // index into the type universe
    std::int64_t count;

    friend bool operator==(const TemplateSlot&, const TemplateSlot&) = default;
};

struct Template {
    std::string name;
    std::vector<TemplateSlot> slots;

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& s : slots)
            t += s.count;
        return t;
    }
};

/// Validates slots and merges duplicate slot types by summing their counts
/// (first occurrence keeps its position).
inline Template make_template(std::string name, const TypeUniverse& universe,
                              const std::vector<std::pair<std::string, std::int64_t>>& slots) {
    Template t{std::move(name), {}};
    for (const auto& [label, count] : slots) {
        if (count < 1)
            throw ValidationError("template '" + t.name + "': slot '" + label + "' count must be >= 1");
        const auto type = universe.require_index(label);
        auto it = std::find_if(t.slots.begin(), t.slots.end(), [&](const auto& s) { return s.type == type; });
        if (it != t.slots.end())
            it->count += count;
        else
            t.slots.push_back({type, count});
    }
    return t;
}

/// Integer-valued map over every subset X of the universe, indexed by mask.
/// Index 0 (the empty set) is carried for convenience and always 0.
class SupportFunction {
public:
    SupportFunction() = default;
    explicit SupportFunction(std::size_t universe_size)
        : universe_size_(universe_size), values_(std::size_t{1} << universe_size, 0) {}

    std::size_t universe_size() const noexcept { return universe_size_; }
    std::size_t subset_count() const noexcept { return values_.size(); }
    std::int64_t operator()(TypeMask x) const { return values_.at(x); }
    std::int64_t& operator[](TypeMask x) { return values_.at(x); }
    TypeMask full() const noexcept { return static_cast<TypeMask>(values_.size() - 1); }

    friend bool operator==(const SupportFunction&, const SupportFunction&) = default;

private:
    std::size_t universe_size_ = 0;
    std::vector<std::int64_t> values_;
};

/// Nonempty subsets ordered by cardinality, then lexicographically by the
/// universe's label order: {X},{Y},{Z},{X,Y},{X,Z},{Y,Z},{X,Y,Z}.
inline std::vector<TypeMask> subset_order(std::size_t universe_size) {
    std::vector<TypeMask> out;
    const TypeMask full = static_cast<TypeMask>((std::size_t{1} << universe_size) - 1);
    for (TypeMask m = 1; m <= full && m != 0; ++m)
        out.push_back(m);
    auto key = [](TypeMask m) {
        std::vector<int> idx;
        for (int b = 0; b < 32; ++b)
            if (m & (TypeMask{1} << b))
                idx.push_back(b);
        return idx;
    };
    std::sort(out.begin(), out.end(), [&](TypeMask a, TypeMask b) {
        const int ca = std::popcount(a), cb = std::popcount(b);
        if (ca != cb)
            return ca < cb;
        return key(a) < key(b);
    });
    return out;
}

namespace detail {

// value(X) = sum of counts of items whose mask is a subset of X.
template <class Items>
SupportFunction subset_sum(std::size_t universe_size, const Items& items) {
    SupportFunction f(universe_size);
    const TypeMask full = f.full();
    for (const auto& [mask, count] : items) {
        // Enumerate supersets of `mask` within the universe.
        const TypeMask rest = full & ~mask;
        TypeMask sub = rest;
        while (true) {
            f[mask | sub] += count;
            if (sub == 0)
                break;
            sub = (sub - 1) & rest;
        }
    }
    return f;
}

} // namespace detail

/// ST(X) = sum of slot counts whose type lies in X.
inline SupportFunction template_support(const Template& t, const TypeUniverse& universe) {
    std::vector<std::pair<TypeMask, std::int64_t>> items;
    for (const auto& s : t.slots) {
        if (s.type >= universe.size())
            throw ValidationError("template '" + t.name + "' has a slot outside the type universe");
        items.emplace_back(TypeMask{1} << s.type, s.count);
    }
    return detail::subset_sum(universe.size(), items);
}

/// SC / SNC: sum of report counts whose proposition is a subset of X.
inline SupportFunction evidence_support(std::span<const Report> reports, const TypeUniverse& universe) {
    std::vector<std::pair<TypeMask, std::int64_t>> items;
    for (const auto& r : reports) {
        if (r.proposition.universe() != universe.fingerprint())
            throw ValidationError("report '" + r.id + "' belongs to a different type universe");
        items.emplace_back(r.proposition.mask(), r.count);
    }
    return detail::subset_sum(universe.size(), items);
}

/// Same, over a subset of `reports` given by index.
inline SupportFunction evidence_support(std::span<const Report> reports, std::span<const std::size_t> members,
                                        const TypeUniverse& universe) {
    std::vector<Report> picked;
    picked.reserve(members.size());
    for (auto i : members)
        picked.push_back(reports[i]);
    return evidence_support(picked, universe);
}

struct Admissible {
    SupportFunction ac;
    bool feasible = true;
};

/// AC = ST - SC pointwise; infeasible if negative anywhere (the core
/// overcrowds the template).
inline Admissible admissible(const SupportFunction& st, const SupportFunction& sc) {
    if (st.universe_size() != sc.universe_size())
        throw ValidationError("support functions over different universes");
    Admissible out{SupportFunction(st.universe_size()), true};
    for (TypeMask x = 1; x <= st.full() && x != 0; ++x) {
        out.ac[x] = st(x) - sc(x);
        if (out.ac[x] < 0)
            out.feasible = false;
    }
    return out;
}

/// NAC = max(0, SNC - AC) pointwise. A subset the core already overcrowds
/// (AC < 0) admits nothing, so AC is taken as 0 there; NAC <= SNC always.
inline SupportFunction inadmissible(const SupportFunction& snc, const SupportFunction& ac) {
    if (snc.universe_size() != ac.universe_size())
        throw ValidationError("support functions over different universes");
    SupportFunction nac(snc.universe_size());
    for (TypeMask x = 1; x <= snc.full() && x != 0; ++x)
        nac[x] = std::max<std::int64_t>(0, snc(x) - std::max<std::int64_t>(0, ac(x)));
    return nac;
}

struct TemplateFit {
    std::string template_name;
    Ratio mu1; // slotwise: min over slots of SC/ST at the slot type
    Ratio mu2; // aggregate: SC(TY)/ST(TY)
    Ratio mu;  // (mu1 + mu2)/2 when feasible, else 0
    bool feasible = false;
};

/// Degree of fit between a core (via its support SC) and template `t`.
inline TemplateFit fit(const Template& t, const SupportFunction& sc, const SupportFunction& st) {
    TemplateFit out;
    out.template_name = t.name;
    if (t.slots.empty() || st(st.full()) == 0)
        return out;
    out.feasible = admissible(st, sc).feasible;
    std::optional<Ratio> slotwise;
    for (const auto& s : t.slots) {
        const TypeMask p = TypeMask{1} << s.type;
        Ratio q(sc(p), st(p));
        if (!slotwise || q < *slotwise)
            slotwise = q;
    }
    out.mu1 = *slotwise;
    out.mu2 = Ratio(sc(sc.full()), st(st.full()));
    if (out.feasible)
        out.mu = (out.mu1 + out.mu2) / 2;
    return out;
}

struct TemplateSelection {
    std::size_t index; // into the catalog
    TemplateFit fit;
};

/// Fits of every catalog template against a core, in catalog order.
inline std::vector<TemplateFit> fit_catalog(std::span<const Report> core, std::span<const Template> catalog,
                                            const TypeUniverse& universe) {
    const SupportFunction sc = evidence_support(core, universe);
    std::vector<TemplateFit> fits;
    fits.reserve(catalog.size());
    for (const auto& t : catalog)
        fits.push_back(fit(t, sc, template_support(t, universe)));
    return fits;
}

/// Feasible template of maximal fit; earliest in catalog order on ties.
inline std::optional<TemplateSelection> select_template(std::span<const Report> core, std::span<const Template> catalog,
                                                        const TypeUniverse& universe) {
    if (catalog.empty())
        throw ValidationError("template catalog is empty");
    const auto fits = fit_catalog(core, catalog, universe);
    std::optional<TemplateSelection> best;
    for (std::size_t y = 0; y < fits.size(); ++y) {
        if (!fits[y].feasible)
            continue;
        if (!best || fits[y].mu > best->fit.mu)
            best = TemplateSelection{y, fits[y]};
    }
    return best;
}

/// m(report not in cluster) = NAC(p) / SNC(p) at the report's own proposition p.
inline Ratio basic_belief_not_in(const Proposition& p, const SupportFunction& snc, const SupportFunction& nac) {
    const auto denom = snc(p.mask());
    if (denom <= 0)
        throw ValidationError("basic belief needs positive non-core support at the report's proposition");
    return Ratio(nac(p.mask()), denom);
}

inline constexpr double kMaxBasicBelief = 0.999999;

/// J = -log(1 - m) for non-core reports (m capped at kMaxBasicBelief), 0 for core reports.
inline double template_interaction(double m, bool is_core) {
    if (is_core)
        return 0.0;
    if (!(m >= 0.0 && m <= 1.0))
        throw ValidationError("basic belief outside [0, 1]");
    return -std::log1p(-std::min(m, kMaxBasicBelief));
}

/// Basic beliefs against every non-core report of one cluster, given its
/// core and template. Result is aligned with `non_core`.
inline std::vector<Ratio> non_core_beliefs(std::span<const Report> reports, std::span<const std::size_t> core,
                                           std::span<const std::size_t> non_core, const Template& t,
                                           const TypeUniverse& universe) {
    const SupportFunction st = template_support(t, universe);
    const SupportFunction sc = evidence_support(reports, core, universe);
    const SupportFunction snc = evidence_support(reports, non_core, universe);
    const SupportFunction nac = inadmissible(snc, admissible(st, sc).ac);
    std::vector<Ratio> m;
    m.reserve(non_core.size());
    for (auto j : non_core)
        m.push_back(basic_belief_not_in(reports[j].proposition, snc, nac));
    return m;
}

} // namespace forceagg
