// Parallel versus sequential reachability graph construction.

#include <benchmark/benchmark.h>

#include "hpn/hierarchy.hpp"
#include "hpn/metamodel.hpp"
#include "hpn/reachability.hpp"

using namespace hpn;

namespace {

PetriNet fork_net(std::size_t k) {
    NetBuilder b;
    auto start = b.add_place("start", 1);
    auto end = b.add_place("end");
    auto fork = b.add_transition("fork"), join = b.add_transition("join"), back = b.add_transition("back");
    b.add_arc(start, fork);
    b.add_arc(join, end);
    b.add_arc(end, back);
    b.add_arc(back, start);
    for (std::size_t i = 0; i < k; ++i) {
        auto a = b.add_place("a" + std::to_string(i)), c = b.add_place("b" + std::to_string(i));
        auto t = b.add_transition("s" + std::to_string(i));
        b.add_arc(fork, a);
        b.add_arc(a, t);
        b.add_arc(t, c);
        b.add_arc(c, join);
    }
    return b.build();
}

template <auto Build>
void fork(benchmark::State& state) {
    auto net = fork_net(static_cast<std::size_t>(state.range(0)));
    ReachOptions o;
    o.state_limit = 4'000'000;
    std::size_t nodes = 0;
    for (auto _ : state) {
        auto g = Build(net, o);
        nodes = g.node_count();
        benchmark::DoNotOptimize(nodes);
    }
    state.counters["states"] = static_cast<double>(nodes);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(nodes));
}

template <auto Build>
void comm(benchmark::State& state) {
    auto net = purify(generate_template(CommTemplate{{Timeout::Finite, Timeout::Finite}, false}, "comm").net).net;
    ReachOptions o;
    o.mode = GuardMode::Valued;
    for (auto _ : state) {
        auto g = Build(net, o);
        benchmark::DoNotOptimize(g.node_count());
    }
}

} // namespace

BENCHMARK(fork<build_graph>)->Name("fork/parallel")->DenseRange(12, 18, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(fork<build_graph_serial>)->Name("fork/serial")->DenseRange(12, 18, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(comm<build_graph>)->Name("comm_valued/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(comm<build_graph_serial>)->Name("comm_valued/serial")->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
