#pragma once
// Evidence model: type universe, propositions as bitmasks, simple support
// reports, pairwise conflict interactions and the Potts clustering energy.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forceagg/errors.hpp"

namespace forceagg {

inline constexpr double kDefaultMassCap = 0.999;
inline constexpr std::size_t kMaxUniverseSize = 16;

using TypeMask = std::uint32_t;

class TypeUniverse {
public:
    explicit TypeUniverse(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.empty())
            throw ValidationError("type universe must not be empty");
        if (labels_.size() > kMaxUniverseSize)
            throw ValidationError("type universe has " + std::to_string(labels_.size()) +
                                  " labels; at most " + std::to_string(kMaxUniverseSize) + " supported");
        for (std::size_t i = 0; i < labels_.size(); ++i)
            for (std::size_t j = i + 1; j < labels_.size(); ++j)
                if (labels_[i] == labels_[j])
                    throw ValidationError("duplicate type label '" + labels_[i] + "'");
        // FNV-1a over the ordered labels; identifies the universe inside propositions.
        std::uint64_t h = 1469598103934665603ULL;
        for (const auto& l : labels_) {
            for (unsigned char c : l) {
                h ^= c;
                h *= 1099511628211ULL;
            }
            h ^= 0x1f;
            h *= 1099511628211ULL;
        }
        fingerprint_ = h;
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }
    TypeMask full_mask() const noexcept { return static_cast<TypeMask>((1u << labels_.size()) - 1u); }

    std::optional<std::size_t> index_of(std::string_view label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label)
                return i;
        return std::nullopt;
    }

    std::size_t require_index(std::string_view label) const {
        auto idx = index_of(label);
        if (!idx)
            throw ValidationError("unknown type label '" + std::string(label) + "'");
        return *idx;
    }

    template <class Range>
    TypeMask mask_of(const Range& names) const {
        TypeMask m = 0;
        for (const auto& n : names)
            m |= TypeMask{1} << require_index(n);
        return m;
    }

    TypeMask mask_of(std::initializer_list<std::string_view> names) const {
        TypeMask m = 0;
        for (auto n : names)
            m |= TypeMask{1} << require_index(n);
        return m;
    }

    std::vector<std::string> labels_of(TypeMask mask) const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (mask & (TypeMask{1} << i))
                out.push_back(labels_[i]);
        return out;
    }

    friend bool operator==(const TypeUniverse& a, const TypeUniverse& b) { return a.labels_ == b.labels_; }

private:
    std::vector<std::string> labels_;
    std::uint64_t fingerprint_ = 0;
};

/// Nonempty subset of a type universe.
class Proposition {
public:
    static Proposition from_mask(const TypeUniverse& u, TypeMask mask) {
        if (mask == 0)
            throw ValidationError("proposition must be nonempty");
        if ((mask & ~u.full_mask()) != 0)
            throw ValidationError("proposition has members outside the type universe");
        return Proposition(mask, u.fingerprint());
    }

    static Proposition of(const TypeUniverse& u, std::initializer_list<std::string_view> names) {
        return from_mask(u, u.mask_of(names));
    }

    template <class Range>
    static Proposition of(const TypeUniverse& u, const Range& names) {
        return from_mask(u, u.mask_of(names));
    }

    TypeMask mask() const noexcept { return mask_; }
    std::uint64_t universe() const noexcept { return universe_; }
    int cardinality() const noexcept { return std::popcount(mask_); }
    bool is_singleton() const noexcept { return cardinality() == 1; }
    bool subset_of(TypeMask x) const noexcept { return (mask_ & ~x) == 0; }

    friend bool operator==(const Proposition&, const Proposition&) = default;

private:
    Proposition(TypeMask m, std::uint64_t u) : mask_(m), universe_(u) {}

    TypeMask mask_;
    std::uint64_t universe_;
};

/// One intelligence report: a simple support function with a single focal
/// element `proposition` carrying `mass`, the rest on the whole universe.
struct Report {
    std::string id;
    Proposition proposition;
    double mass;
    std::int64_t count;
};

inline Report make_report(std::string id, Proposition proposition, double mass, std::int64_t count = 1,
                          double mass_cap = kDefaultMassCap) {
    if (!(mass > 0.0) || !(mass <= mass_cap))
        throw ValidationError("report '" + id + "': mass " + std::to_string(mass) + " outside (0, " +
                              std::to_string(mass_cap) + "]");
    if (count < 1)
        throw ValidationError("report '" + id + "': count must be >= 1");
    return Report{std::move(id), proposition, mass, count};
}

/// 1 when the propositions are disjoint (the reports conflict), else 0.
inline int conflict_indicator(const Proposition& a, const Proposition& b) {
    if (a.universe() != b.universe())
        throw ValidationError("propositions belong to different type universes");
    return (a.mask() & b.mask()) == 0 ? 1 : 0;
}

/// J_ij = -log(1 - s_i s_j) for disjoint propositions, 0 otherwise.
inline double pairwise_interaction(const Report& ri, const Report& rj) {
    if (conflict_indicator(ri.proposition, rj.proposition) == 0)
        return 0.0;
    return -std::log1p(-ri.mass * rj.mass);
}

/// Symmetric N x N interaction matrix with zero diagonal.
class ConflictMatrix {
public:
    ConflictMatrix() = default;
    explicit ConflictMatrix(Eigen::MatrixXd j) : j_(std::move(j)) {}

    std::size_t size() const noexcept { return static_cast<std::size_t>(j_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return j_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXd& matrix() const noexcept { return j_; }

private:
    Eigen::MatrixXd j_;
};

inline ConflictMatrix build_conflict_matrix(std::span<const Report> reports) {
    const auto n = static_cast<Eigen::Index>(reports.size());
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) {
            const double v = pairwise_interaction(reports[a], reports[b]);
            j(a, b) = v;
            j(b, a) = v;
        }
    return ConflictMatrix(std::move(j));
}

/// Pairwise-approximated Dempster conflict between report i and a cluster:
/// 1 - exp(-sum_j J_ij). Report i itself is skipped if listed among members.
inline double cluster_conflict(const ConflictMatrix& j, std::size_t i, std::span<const std::size_t> members) {
    double sum = 0.0;
    for (auto m : members)
        if (m != i)
            sum += j(i, m);
    return -std::expm1(-sum);
}

inline double cluster_conflict(const Report& r, std::span<const Report> members) {
    double sum = 0.0;
    for (const auto& m : members)
        if (m.id != r.id)
            sum += pairwise_interaction(r, m);
    return -std::expm1(-sum);
}

/// Discrete spins: cluster_of[i] in [0, k).
struct HardAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> cluster_of;

    std::size_t size() const noexcept { return cluster_of.size(); }
    friend bool operator==(const HardAssignment&, const HardAssignment&) = default;
};

/// Sum of J_ij over unordered same-cluster pairs.
inline double energy(const HardAssignment& assign, const ConflictMatrix& j) {
    if (assign.size() != j.size())
        throw ValidationError("assignment size does not match conflict matrix");
    double e = 0.0;
    for (std::size_t a = 0; a < assign.size(); ++a)
        for (std::size_t b = a + 1; b < assign.size(); ++b)
            if (assign.cluster_of[a] == assign.cluster_of[b])
                e += j(a, b);
    return e;
}

} // namespace forceagg
