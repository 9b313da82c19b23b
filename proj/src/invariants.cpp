#include "hpn/invariants.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>

#include "hpn/error.hpp"
#include "hpn/reachability.hpp"

namespace hpn {

namespace {

using i128 = __int128;

struct Row {
    std::vector<std::int64_t> rest; // remaining constraint columns
    std::vector<std::int64_t> id;   // solution part
    std::vector<std::uint64_t> support;
};

bool is_subset(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] & ~b[i])
            return false;
    return true;
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0)
        a = -a;
    if (b < 0)
        b = -b;
    while (b) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();

/// Combines a and b so column `col` cancels; nullopt on overflow.
std::optional<Row> combine(const Row& pos, const Row& neg, std::size_t col) {
    i128 fp = -static_cast<i128>(neg.rest[col]);
    i128 fn = pos.rest[col];
    std::vector<i128> rest(pos.rest.size()), id(pos.id.size());
    i128 g = 0;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        rest[i] = fp * pos.rest[i] + fn * neg.rest[i];
        g = gcd128(g, rest[i]);
    }
    for (std::size_t i = 0; i < id.size(); ++i) {
        id[i] = fp * pos.id[i] + fn * neg.id[i];
        g = gcd128(g, id[i]);
    }
    Row out;
    out.rest.resize(rest.size());
    out.id.resize(id.size());
    for (std::size_t i = 0; i < rest.size(); ++i) {
        i128 v = rest[i] / g;
        if (v > kMax || v < -kMax)
            return std::nullopt;
        out.rest[i] = static_cast<std::int64_t>(v);
    }
    for (std::size_t i = 0; i < id.size(); ++i) {
        i128 v = id[i] / g;
        if (v > kMax)
            return std::nullopt;
        out.id[i] = static_cast<std::int64_t>(v);
    }
    out.support.resize(pos.support.size());
    for (std::size_t i = 0; i < out.support.size(); ++i)
        out.support[i] = pos.support[i] | neg.support[i];
    return out;
}

/// Drops rows whose support strictly contains another row's support, and exact duplicates.
void prune(std::vector<Row>& rows) {
    std::vector<char> drop(rows.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.size() && !drop[i]; ++j) {
            if (i == j || drop[j])
                continue;
            if (!is_subset(rows[j].support, rows[i].support))
                continue;
            if (rows[j].support != rows[i].support)
                drop[i] = 1;
            else if (j < i && rows[j].id == rows[i].id && rows[j].rest == rows[i].rest)
                drop[i] = 1;
        }
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (!drop[i]) {
            if (k != i)
                rows[k] = std::move(rows[i]);
            ++k;
        }
    rows.resize(k);
}

void sort_descending(std::vector<std::vector<std::int64_t>>& v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a > b; });
}

} // namespace

std::vector<std::vector<std::int64_t>> farkas(const IncidenceMatrix& a, const FarkasOptions& options,
                                              FarkasStats& stats) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    stats = FarkasStats{};
    const std::size_t words = (n + 63) / 64;

    std::vector<Row> rows(n);
    for (std::size_t j = 0; j < n; ++j) {
        rows[j].rest.resize(m);
        for (std::size_t i = 0; i < m; ++i)
            rows[j].rest[i] = a.at(i, j);
        rows[j].id.assign(n, 0);
        rows[j].id[j] = 1;
        rows[j].support.assign(words, 0);
        rows[j].support[j / 64] |= std::uint64_t{1} << (j % 64);
    }
    stats.peak_rows = rows.size();

    std::vector<char> done(m, 0);
    for (std::size_t step = 0; step < m; ++step) {
        // Eliminate the column producing the fewest combinations first.
        std::size_t best = m;
        std::size_t best_cost = std::numeric_limits<std::size_t>::max();
        for (std::size_t c = 0; c < m; ++c) {
            if (done[c])
                continue;
            std::size_t pos = 0, neg = 0;
            for (const auto& r : rows) {
                pos += r.rest[c] > 0;
                neg += r.rest[c] < 0;
            }
            if (pos * neg < best_cost || best == m) {
                best_cost = pos * neg;
                best = c;
            }
        }
        done[best] = 1;

        std::vector<Row> next;
        std::vector<const Row*> pos, neg;
        for (const auto& r : rows) {
            if (r.rest[best] == 0)
                next.push_back(r);
            else if (r.rest[best] > 0)
                pos.push_back(&r);
            else
                neg.push_back(&r);
        }
        for (const Row* p : pos) {
            for (const Row* q : neg) {
                auto c = combine(*p, *q, best);
                if (!c) {
                    stats.aborted = true;
                    stats.abort_reason = "integer overflow during elimination";
                    return {};
                }
                next.push_back(std::move(*c));
                if (next.size() > options.max_rows * 4 + 64) {
                    prune(next);
                    if (next.size() > options.max_rows) {
                        stats.aborted = true;
                        stats.abort_reason = "intermediate row limit exceeded";
                        stats.peak_rows = std::max(stats.peak_rows, next.size());
                        return {};
                    }
                }
            }
        }
        prune(next);
        stats.peak_rows = std::max(stats.peak_rows, next.size());
        if (next.size() > options.max_rows) {
            stats.aborted = true;
            stats.abort_reason = "intermediate row limit exceeded";
            return {};
        }
        rows = std::move(next);
    }

    std::vector<std::vector<std::int64_t>> out;
    for (auto& r : rows)
        out.push_back(std::move(r.id));
    sort_descending(out);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    stats.linearly_independent = rank(out) == out.size();
    return out;
}

std::size_t rank(const std::vector<std::vector<std::int64_t>>& rows) {
    if (rows.empty())
        return 0;
    std::vector<std::vector<i128>> m;
    for (const auto& r : rows)
        m.emplace_back(r.begin(), r.end());
    const std::size_t cols = m[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < m.size(); ++c) {
        std::size_t piv = r;
        while (piv < m.size() && m[piv][c] == 0)
            ++piv;
        if (piv == m.size())
            continue;
        std::swap(m[r], m[piv]);
        for (std::size_t i = r + 1; i < m.size(); ++i) {
            if (m[i][c] == 0)
                continue;
            i128 a = m[r][c], b = m[i][c];
            i128 g = 0;
            for (std::size_t k = 0; k < cols; ++k) {
                m[i][k] = a * m[i][k] - b * m[r][k];
                g = gcd128(g, m[i][k]);
            }
            if (g > 1)
                for (auto& v : m[i])
                    v /= g;
        }
        ++r;
    }
    return r;
}

std::vector<PlaceId> PlaceInvariant::support() const {
    std::vector<PlaceId> out;
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (weights[i] != 0)
            out.push_back(PlaceId{static_cast<std::uint32_t>(i)});
    return out;
}

std::int64_t PlaceInvariant::weighted_sum(const Marking& m) const {
    if (m.size() != weights.size())
        throw StructuralError("marking length does not match invariant length");
    std::int64_t s = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        s += weights[i] * static_cast<std::int64_t>(m[i]);
    return s;
}

std::vector<TransitionId> TransitionInvariant::support() const {
    std::vector<TransitionId> out;
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] != 0)
            out.push_back(TransitionId{static_cast<std::uint32_t>(i)});
    return out;
}

PlaceBasis minimal_place_invariants(const IncidenceMatrix& n, const FarkasOptions& options) {
    PlaceBasis out;
    for (auto& w : farkas(n, options, out.stats))
        out.invariants.push_back({std::move(w), 0});
    return out;
}

PlaceBasis minimal_place_invariants(const IncidenceMatrix& n, const Marking& m0, const FarkasOptions& options) {
    if (m0.size() != n.cols())
        throw StructuralError("marking length does not match place count");
    auto out = minimal_place_invariants(n, options);
    for (auto& y : out.invariants)
        y.weighted_sum_at_m0 = y.weighted_sum(m0);
    return out;
}

PlaceBasis minimal_place_invariants(const PetriNet& net, const FarkasOptions& options) {
    return minimal_place_invariants(incidence_matrix(net), net.initial_marking(), options);
}

TransitionBasis minimal_transition_invariants(const IncidenceMatrix& n, const FarkasOptions& options) {
    IncidenceMatrix t(n.cols(), n.rows());
    for (std::size_t i = 0; i < n.rows(); ++i)
        for (std::size_t j = 0; j < n.cols(); ++j)
            t.at(j, i) = n.at(i, j);
    TransitionBasis out;
    for (auto& x : farkas(t, options, out.stats))
        out.invariants.push_back({std::move(x)});
    return out;
}

InvariantCheck verify_invariant(const IncidenceMatrix& n, std::span<const std::int64_t> v, InvariantKind kind) {
    const bool place = kind == InvariantKind::Place;
    if (v.size() != (place ? n.cols() : n.rows()))
        throw StructuralError(std::string(place ? "place" : "transition") + " vector has length " +
                              std::to_string(v.size()) + ", expected " +
                              std::to_string(place ? n.cols() : n.rows()));
    InvariantCheck out;
    out.trivial = std::all_of(v.begin(), v.end(), [](auto x) { return x == 0; });
    out.holds = true;
    const std::size_t outer = place ? n.rows() : n.cols();
    const std::size_t inner = place ? n.cols() : n.rows();
    for (std::size_t i = 0; i < outer && out.holds; ++i) {
        i128 s = 0;
        for (std::size_t j = 0; j < inner; ++j)
            s += static_cast<i128>(place ? n.at(i, j) : n.at(j, i)) * v[j];
        out.holds = s == 0;
    }
    return out;
}

std::string_view to_string(Conservativeness c) {
    switch (c) {
    case Conservativeness::Strict:
        return "strict";
    case Conservativeness::Conservative:
        return "conservative";
    case Conservativeness::Partial:
        return "partial";
    case Conservativeness::NotConservative:
        return "not conservative";
    }
    return "?";
}

std::string_view to_string(SafetyClass s) {
    switch (s) {
    case SafetyClass::Safe:
        return "safe";
    case SafetyClass::Bounded:
        return "bounded";
    case SafetyClass::Unknown:
        return "unknown";
    }
    return "?";
}

ConservativenessVerdict classify_conservativeness(const PlaceBasis& basis, const Marking& m0) {
    ConservativenessVerdict out;
    if (basis.stats.aborted) {
        out.aborted = true;
        return out;
    }
    if (basis.invariants.empty())
        return out;
    std::vector<std::int64_t> s(basis.invariants.front().weights.size(), 0);
    for (const auto& y : basis.invariants)
        for (std::size_t i = 0; i < s.size(); ++i)
            s[i] += y.weights[i];
    std::int64_t g = 0;
    for (auto v : s)
        g = std::gcd(g, v);
    for (auto& v : s)
        v /= g;
    if (std::all_of(s.begin(), s.end(), [](auto v) { return v == 1; }))
        out.cls = Conservativeness::Strict;
    else if (std::all_of(s.begin(), s.end(), [](auto v) { return v > 0; }))
        out.cls = Conservativeness::Conservative;
    else
        out.cls = Conservativeness::Partial;
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        sum += s[i] * static_cast<std::int64_t>(m0[i]);
    out.weighted_sum = sum;
    out.witness = std::move(s);
    return out;
}

ConservativenessVerdict classify_conservativeness(const IncidenceMatrix& n, const Marking& m0,
                                                  const FarkasOptions& options) {
    return classify_conservativeness(minimal_place_invariants(n, m0, options), m0);
}

SafetyEstimate safety_from_invariants(const PlaceBasis& basis, const Marking& m0) {
    SafetyEstimate out;
    if (basis.stats.aborted) {
        for (std::uint32_t p = 0; p < m0.size(); ++p)
            out.uncovered.push_back(PlaceId{p});
        return out;
    }
    std::uint64_t k = 0;
    for (std::uint32_t p = 0; p < m0.size(); ++p) {
        std::optional<std::uint64_t> best;
        for (const auto& y : basis.invariants) {
            if (y.weights.size() != m0.size())
                throw StructuralError("invariant length does not match marking length");
            if (y.weights[p] <= 0)
                continue;
            auto b = static_cast<std::uint64_t>(y.weighted_sum(m0) / y.weights[p]);
            best = best ? std::min(*best, b) : b;
        }
        if (!best)
            out.uncovered.push_back(PlaceId{p});
        else
            k = std::max(k, *best);
    }
    if (!out.uncovered.empty())
        return out;
    out.bound = k;
    out.cls = k <= 1 ? SafetyClass::Safe : SafetyClass::Bounded;
    return out;
}

LivenessEvidence liveness_evidence(const TransitionBasis& basis, const ReachabilityGraph& g,
                                   std::size_t candidate_limit) {
    LivenessEvidence out;
    const std::size_t nt = g.net().transition_count();
    const std::size_t b = basis.invariants.size();
    if (basis.stats.aborted || b == 0 || nt == 0)
        return out;
    std::vector<char> covered(nt, 0);
    for (const auto& x : basis.invariants)
        for (std::size_t t = 0; t < nt; ++t)
            covered[t] |= x.counts[t] != 0;
    if (std::find(covered.begin(), covered.end(), 0) != covered.end())
        return out;

    auto try_candidate = [&](const std::vector<std::uint32_t>& coeff) {
        std::vector<std::uint32_t> x(nt, 0);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t t = 0; t < nt; ++t)
                x[t] += coeff[i] * static_cast<std::uint32_t>(basis.invariants[i].counts[t]);
        if (std::find(x.begin(), x.end(), 0u) != x.end())
            return false;
        FiringCountVector fx(x);
        auto seq = find_cycle_realizing(g, fx, 200'000);
        if (!seq)
            return false;
        out.found = true;
        out.witness = std::move(fx);
        out.sequence = std::move(*seq);
        return true;
    };

    // Coefficient vectors over {0,1,2} by increasing total, all-ones first.
    std::size_t tried = 0;
    std::vector<std::uint32_t> ones(b, 1);
    ++tried;
    if (try_candidate(ones))
        return out;
    for (std::size_t total = 1; total <= 2 * b && tried < candidate_limit; ++total) {
        std::vector<std::uint32_t> coeff(b, 0);
        // Enumerate compositions of `total` into b parts bounded by 2.
        std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) -> bool {
            if (tried >= candidate_limit)
                return false;
            if (i == b) {
                if (left != 0 || coeff == ones)
                    return false;
                ++tried;
                return try_candidate(coeff);
            }
            if (left > 2 * (b - i))
                return false;
            for (std::uint32_t c = 0; c <= 2 && c <= left; ++c) {
                coeff[i] = c;
                if (rec(i + 1, left - c))
                    return true;
            }
            coeff[i] = 0;
            return false;
        };
        if (rec(0, total))
            return out;
    }
    return out;
}

} // namespace hpn
