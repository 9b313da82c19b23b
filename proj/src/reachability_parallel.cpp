#include <algorithm>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "graph_assembler.hpp"

namespace hpn {

namespace {

/// Flattened, read-only view of the net used by the expansion loop.
class SuccessorKernel {
public:
    SuccessorKernel(const PetriNet& net, const ReachOptions& options)
        : net_(net), options_(options), places_(net.place_count()), transitions_(net.transition_count()) {
        in_offsets_.push_back(0);
        for (std::uint32_t t = 0; t < transitions_; ++t) {
            for (const auto& in : net.inputs(TransitionId{t}))
                inputs_.push_back({in.place.index, in.weight});
            in_offsets_.push_back(inputs_.size());
        }
        for (std::uint32_t t = 0; t < transitions_; ++t) {
            std::vector<std::int64_t> delta(places_, 0);
            for (const auto& in : net.inputs(TransitionId{t}))
                delta[in.place.index] -= in.weight;
            for (const auto& o : net.outputs(TransitionId{t}))
                delta[o.place.index] += o.weight;
            for (std::uint32_t p = 0; p < places_; ++p)
                if (delta[p])
                    deltas_.push_back({p, delta[p]});
            delta_offsets_.push_back(deltas_.size());
        }
        if (options.mode == GuardMode::Valued) {
            atom_table_ = net.atoms();
            for (std::uint32_t t = 0; t < transitions_; ++t)
                guards_.push_back(net.transition(TransitionId{t}).guard.compile(atom_table_));
            higher_.resize(transitions_);
            for (std::uint32_t t = 0; t < transitions_; ++t) {
                int pt = net.transition(TransitionId{t}).priority.value_or(0);
                for (std::uint32_t u = 0; u < transitions_; ++u) {
                    if (u == t || net.transition(TransitionId{u}).priority.value_or(0) <= pt)
                        continue;
                    for (const auto& in : net.inputs(TransitionId{t})) {
                        if (net.pre(TransitionId{u}, in.place)) {
                            higher_[t].push_back(u);
                            break;
                        }
                    }
                }
            }
            if (options.valuations) {
                for (const auto& v : *options.valuations) {
                    std::vector<std::int8_t> row(atom_table_.size(), -1);
                    for (std::size_t a = 0; a < atom_table_.size(); ++a) {
                        auto it = v.find(atom_table_[a]);
                        if (it != v.end())
                            row[a] = it->second ? 1 : 0;
                    }
                    given_.push_back(std::move(row));
                }
            }
        }
    }

    struct Result {
        std::vector<std::uint32_t> fired;
        std::optional<Valuation> blocked;
        bool cap_exceeded = false;
    };

    void expand(const std::vector<std::uint32_t>& m, Result& out, std::vector<char>& scratch,
                std::vector<bool>& values) const {
        out.fired.clear();
        out.blocked.reset();
        out.cap_exceeded = false;
        std::vector<std::uint32_t> token_enabled;
        for (std::uint32_t t = 0; t < transitions_; ++t) {
            bool ok = true;
            for (auto i = in_offsets_[t]; i < in_offsets_[t + 1]; ++i) {
                if (m[inputs_[i].first] < inputs_[i].second) {
                    ok = false;
                    break;
                }
            }
            if (ok)
                token_enabled.push_back(t);
        }
        if (options_.mode == GuardMode::Structural) {
            out.fired = std::move(token_enabled);
            return;
        }

        std::vector<std::uint32_t> relevant;
        for (auto t : token_enabled)
            for (auto a : guards_[t].atoms())
                relevant.push_back(a);
        std::sort(relevant.begin(), relevant.end());
        relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());

        scratch.assign(transitions_, 0);        // bit 1: guard true, bit 2: fired under some valuation
        values.assign(atom_table_.size(), false);

        auto visit = [&]() {
            for (auto t : token_enabled)
                scratch[t] = static_cast<char>((scratch[t] & 2) | (guards_[t].evaluate(values) ? 1 : 0));
            bool any = false;
            for (auto t : token_enabled) {
                if (!(scratch[t] & 1))
                    continue;
                bool blocked = false;
                for (auto u : higher_[t]) {
                    if (scratch[u] & 1) {
                        blocked = true;
                        break;
                    }
                }
                if (!blocked) {
                    scratch[t] |= 2;
                    any = true;
                }
            }
            if (!any && !out.blocked) {
                Valuation shown;
                for (auto a : relevant)
                    shown[atom_table_[a]] = values[a];
                out.blocked = std::move(shown);
            }
            for (auto t : token_enabled)
                scratch[t] &= 2;
        };

        if (options_.valuations) {
            for (const auto& row : given_) {
                for (auto a : relevant) {
                    if (row[a] < 0)
                        throw MissingAtomError(atom_table_[a]);
                    values[a] = row[a] == 1;
                }
                visit();
            }
        } else {
            if (relevant.size() >= 63 || (std::uint64_t{1} << relevant.size()) > options_.max_branches) {
                out.cap_exceeded = true;
                return;
            }
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << relevant.size()); ++mask) {
                for (std::size_t i = 0; i < relevant.size(); ++i)
                    values[relevant[i]] = (mask >> i) & 1;
                visit();
            }
        }
        for (auto t : token_enabled)
            if (scratch[t] & 2)
                out.fired.push_back(t);
    }

    void apply(std::vector<std::uint32_t>& m, std::uint32_t t) const {
        std::size_t begin = t ? delta_offsets_[t - 1] : 0;
        for (auto i = begin; i < delta_offsets_[t]; ++i) {
            auto [p, d] = deltas_[i];
            auto v = static_cast<std::int64_t>(m[p]) + d;
            if (v > static_cast<std::int64_t>(std::numeric_limits<std::uint32_t>::max()))
                throw Error("token count overflow in place '" + net_.place(PlaceId{p}).name + "'");
            m[p] = static_cast<std::uint32_t>(v);
        }
    }

private:
    const PetriNet& net_;
    const ReachOptions& options_;
    std::uint32_t places_;
    std::uint32_t transitions_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> inputs_;
    std::vector<std::size_t> in_offsets_;
    std::vector<std::pair<std::uint32_t, std::int64_t>> deltas_;
    std::vector<std::size_t> delta_offsets_;
    std::vector<std::string> atom_table_;
    std::vector<CompiledGuard> guards_;
    std::vector<std::vector<std::uint32_t>> higher_;
    std::vector<std::vector<std::int8_t>> given_;
};

struct Successor {
    std::uint32_t transition;
    std::uint64_t hash;
    std::int64_t known; // existing node id or -1
    std::vector<std::uint8_t> bytes;
};

struct NodeExpansion {
    std::vector<Successor> successors;
    std::optional<Valuation> blocked;
    bool cap_exceeded = false;
};

} // namespace

ReachabilityGraph build_graph(const PetriNet& net, const ReachOptions& options) {
    if (options.state_limit < 1)
        throw Error("state limit must be at least 1");
    GraphAssembler out(net, options);
    SuccessorKernel kernel(net, options);
    auto& store = out.store();
    auto& edges = out.edges();

    std::vector<std::uint8_t> buf;
    MarkingStore::encode(net.initial_marking().counts(), buf);
    store.insert(buf, MarkingStore::hash_bytes(buf));

    std::uint32_t level_begin = 0;
    std::uint32_t level_end = 1;
    std::size_t expanded = 0;
    bool stop = false;
    std::vector<NodeExpansion> level;

#ifdef _OPENMP
    int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#endif

    while (level_begin < level_end && !stop) {
        const std::size_t width = level_end - level_begin;
        level.clear();
        level.resize(width);
        std::exception_ptr failure;

        // Read-only phase: successors and lookups against nodes of earlier levels.
#pragma omp parallel num_threads(threads) if (width > 64)
        {
            std::vector<std::uint32_t> counts, next;
            std::vector<char> scratch;
            std::vector<bool> values;
            SuccessorKernel::Result result;
#pragma omp for schedule(dynamic, 32)
            for (std::int64_t k = 0; k < static_cast<std::int64_t>(width); ++k) {
                try {
                    auto id = static_cast<std::uint32_t>(level_begin + k);
                    store.decode_into(id, counts);
                    kernel.expand(counts, result, scratch, values);
                    auto& ne = level[k];
                    ne.blocked = std::move(result.blocked);
                    ne.cap_exceeded = result.cap_exceeded;
                    ne.successors.reserve(result.fired.size());
                    for (auto t : result.fired) {
                        next = counts;
                        kernel.apply(next, t);
                        Successor s{t, 0, -1, {}};
                        MarkingStore::encode(next, s.bytes);
                        s.hash = MarkingStore::hash_bytes(s.bytes);
                        if (auto known = store.find(s.bytes, s.hash)) {
                            s.known = *known;
                            s.bytes.clear();
                            s.bytes.shrink_to_fit();
                        }
                        ne.successors.push_back(std::move(s));
                    }
                } catch (...) {
#pragma omp critical(hpn_reach_failure)
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        }
        if (failure)
            std::rethrow_exception(failure);

        // Sequential merge in BFS order keeps numbering deterministic.
        for (std::size_t k = 0; k < width && !stop; ++k) {
            auto id = static_cast<std::uint32_t>(level_begin + k);
            auto& ne = level[k];
            if (ne.cap_exceeded) {
                out.set_branch_cap_exceeded();
                stop = true;
                break;
            }
            if (options.mode == GuardMode::Valued && ne.blocked)
                out.blocked().push_back({id, std::move(*ne.blocked)});
            for (auto& s : ne.successors) {
                std::uint32_t to;
                if (s.known >= 0) {
                    to = static_cast<std::uint32_t>(s.known);
                } else if (auto existing = store.find(s.bytes, s.hash)) {
                    to = *existing;
                } else {
                    if (store.size() >= options.state_limit) {
                        out.set_truncated();
                        stop = true;
                        break;
                    }
                    to = store.insert(s.bytes, s.hash).first;
                }
                edges.push_back({id, TransitionId{s.transition}, to});
            }
            if (!stop)
                expanded = id + 1;
            ne = NodeExpansion{};
        }
        level_begin = level_end;
        level_end = static_cast<std::uint32_t>(store.size());
    }
    out.set_expanded(expanded);
    return out.finish();
}

} // namespace hpn
