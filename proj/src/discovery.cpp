#include "causal/discovery.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "causal/stats.hpp"
#include "causal/util.hpp"

namespace causal {

namespace {

std::pair<std::string, std::string> sorted_pair(const std::string& a, const std::string& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

// next size-r index combination in lexicographic order; false when exhausted
bool next_combination(std::vector<int>& idx, int n, int r) {
    for (int i = r - 1; i >= 0; --i) {
        if (idx[i] < n - (r - i)) {
            ++idx[i];
            for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace

bool DiscoveryConstraints::direction_allowed(const std::string& from, const std::string& to) const {
    if (forbidden.count({from, to})) return false;
    auto tf = tiers.find(from);
    auto tt = tiers.find(to);
    if (tf != tiers.end() && tt != tiers.end() && tf->second > tt->second) return false;
    return true;
}

bool DiscoveryConstraints::adjacency_allowed(const std::string& a, const std::string& b) const {
    if (absent.count(sorted_pair(a, b))) return false;
    return direction_allowed(a, b) || direction_allowed(b, a);
}

DiscoveryConstraints parse_constraints(const std::string& text) {
    DiscoveryConstraints out;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = strip_comment(raw);
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind, a, b, extra;
        ls >> kind >> a >> b;
        if (ls >> extra || a.empty() || b.empty())
            throw std::runtime_error("constraints line " + std::to_string(lineno) + ": expected 'KIND A B'");
        if (kind == "forbid") {
            out.forbidden.insert({a, b});
        } else if (kind == "absent") {
            out.absent.insert(sorted_pair(a, b));
        } else if (kind == "tier") {
            out.tiers[a] = static_cast<int>(parse_long(b, "tier"));
        } else {
            throw std::runtime_error("constraints line " + std::to_string(lineno) + ": unknown directive '" + kind +
                                     "'");
        }
    }
    return out;
}

DiscoveryConstraints load_constraints(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open constraints file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_constraints(ss.str());
}

SkeletonResult pc_skeleton(const std::vector<std::string>& vars, const CiTestFn& test, double alpha,
                           const DiscoveryConstraints& constraints, int max_cond_size) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("pc_skeleton: alpha must lie in (0, 1)");
    if (max_cond_size < 0) throw std::invalid_argument("pc_skeleton: max_cond_size must be >= 0");
    const int n = static_cast<int>(vars.size());

    SkeletonResult res;
    res.nodes = vars;
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (constraints.adjacency_allowed(vars[i], vars[j])) adj[i][j] = adj[j][i] = 1;

    // all pair and neighbour traversal follows name order
    std::vector<int> by_name(n);
    std::iota(by_name.begin(), by_name.end(), 0);
    std::sort(by_name.begin(), by_name.end(), [&](int a, int b) { return vars[a] < vars[b]; });

    auto neighbors_sorted = [&](int v, int excluded) {
        std::vector<int> out;
        for (int w : by_name)
            if (w != v && w != excluded && adj[v][w]) out.push_back(w);
        return out;
    };

    for (int level = 0; level <= max_cond_size; ++level) {
        bool any_testable_next = false;
        for (int pi = 0; pi < n; ++pi) {
            for (int pj = pi + 1; pj < n; ++pj) {
                int a = by_name[pi];
                int b = by_name[pj];
                if (!adj[a][b]) continue;

                // gather level-sized subsets from both endpoints' neighbourhoods
                std::set<std::vector<int>> candidates; // each subset in name order
                for (int endpoint : {a, b}) {
                    int other = endpoint == a ? b : a;
                    std::vector<int> nb = neighbors_sorted(endpoint, other);
                    if (static_cast<int>(nb.size()) < level) continue;
                    if (level == 0) {
                        candidates.insert(std::vector<int>{});
                        continue;
                    }
                    std::vector<int> idx(level);
                    std::iota(idx.begin(), idx.end(), 0);
                    do {
                        std::vector<int> subset;
                        subset.reserve(level);
                        for (int q : idx) subset.push_back(nb[q]);
                        candidates.insert(subset);
                    } while (next_combination(idx, static_cast<int>(nb.size()), level));
                }

                // keep name-lexicographic trial order across both endpoints
                std::vector<std::vector<int>> ordered(candidates.begin(), candidates.end());
                std::sort(ordered.begin(), ordered.end(), [&](const std::vector<int>& x, const std::vector<int>& y) {
                    std::vector<std::string> xs, ys;
                    for (int q : x) xs.push_back(vars[q]);
                    for (int q : y) ys.push_back(vars[q]);
                    return xs < ys;
                });

                for (const auto& subset : ordered) {
                    std::vector<std::string> zs;
                    zs.reserve(subset.size());
                    for (int q : subset) zs.push_back(vars[q]);
                    CITestResult r = test(vars[a], vars[b], zs);
                    if (r.p_value > alpha) {
                        adj[a][b] = adj[b][a] = 0;
                        res.sepsets[{std::min(a, b), std::max(a, b)}] = subset;
                        break;
                    }
                }
            }
        }
        for (int i = 0; i < n && !any_testable_next; ++i)
            for (int j = 0; j < n && !any_testable_next; ++j) {
                if (i == j || !adj[i][j]) continue;
                int deg = 0;
                for (int w = 0; w < n; ++w)
                    if (w != i && w != j && adj[i][w]) ++deg;
                if (deg > level) any_testable_next = true;
            }
        if (!any_testable_next) break;
    }

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (adj[i][j]) res.edges.insert({i, j});
    return res;
}

namespace {

struct Orienter {
    const std::vector<std::string>& vars;
    const DiscoveryConstraints& constraints;
    Cpdag& g;

    bool allowed(int from, int to) const { return constraints.direction_allowed(vars[from], vars[to]); }

    // promotes an undirected edge; returns false on conflict or constraint
    bool orient(int from, int to, const char* why) {
        if (g.has_directed(from, to)) return false;
        if (g.has_directed(to, from)) {
            g.conflicts.push_back(std::string(why) + ": " + vars[from] + " -> " + vars[to] +
                                  " conflicts with existing orientation");
            return false;
        }
        if (!g.has_undirected(from, to)) return false;
        if (!allowed(from, to)) return false;
        g.undirected.erase({std::min(from, to), std::max(from, to)});
        g.directed.insert({from, to});
        return true;
    }
};

} // namespace

Cpdag pc_orient(const SkeletonResult& skeleton, const DiscoveryConstraints& constraints) {
    const auto& vars = skeleton.nodes;
    const int n = static_cast<int>(vars.size());

    Cpdag g;
    g.nodes = vars;
    g.undirected = skeleton.edges;

    std::vector<int> by_name(n);
    std::iota(by_name.begin(), by_name.end(), 0);
    std::sort(by_name.begin(), by_name.end(), [&](int a, int b) { return vars[a] < vars[b]; });

    // v-structures: a - b - c with a, c nonadjacent and b outside sepset(a, c)
    std::set<std::pair<int, int>> proposals;
    for (int bi : by_name) {
        for (int ai : by_name) {
            if (ai == bi || !skeleton.adjacent(ai, bi)) continue;
            for (int ci : by_name) {
                if (ci == bi || ci == ai || vars[ai] >= vars[ci]) continue;
                if (!skeleton.adjacent(ci, bi) || skeleton.adjacent(ai, ci)) continue;
                auto sep = skeleton.sepsets.find({std::min(ai, ci), std::max(ai, ci)});
                if (sep == skeleton.sepsets.end()) continue; // removed by constraint, no evidence
                if (std::find(sep->second.begin(), sep->second.end(), bi) != sep->second.end()) continue;
                proposals.insert({ai, bi});
                proposals.insert({ci, bi});
            }
        }
    }

    Orienter orienter{vars, constraints, g};
    for (const auto& [from, to] : proposals) {
        if (proposals.count({to, from})) {
            if (from < to)
                g.conflicts.push_back("v-structure conflict on " + vars[from] + " - " + vars[to] +
                                      ", kept undirected");
            continue;
        }
        orienter.orient(from, to, "v-structure");
    }

    // Meek rules to closure
    bool changed = true;
    while (changed) {
        changed = false;
        for (int bi : by_name) {
            for (int ci : by_name) {
                if (bi == ci || !g.has_undirected(bi, ci)) continue;
                // R1: a -> b, b - c, a and c nonadjacent
                for (int ai = 0; ai < n && !changed; ++ai)
                    if (g.has_directed(ai, bi) && !g.adjacent(ai, ci)) changed = orienter.orient(bi, ci, "meek1");
                if (changed) break;
                // R2: b -> a -> c with b - c forces b -> c
                for (int ai = 0; ai < n && !changed; ++ai)
                    if (g.has_directed(bi, ai) && g.has_directed(ai, ci)) changed = orienter.orient(bi, ci, "meek2");
                if (changed) break;
                // R3: b - a1, b - a2, a1 -> c, a2 -> c, a1 and a2 nonadjacent
                for (int a1 = 0; a1 < n && !changed; ++a1) {
                    if (!g.has_undirected(bi, a1) || !g.has_directed(a1, ci)) continue;
                    for (int a2 = a1 + 1; a2 < n && !changed; ++a2) {
                        if (!g.has_undirected(bi, a2) || !g.has_directed(a2, ci)) continue;
                        if (!g.adjacent(a1, a2)) changed = orienter.orient(bi, ci, "meek3");
                    }
                }
                if (changed) break;
                // R4: b - d, d -> e, e -> c, b adjacent e, c and d nonadjacent
                for (int d = 0; d < n && !changed; ++d) {
                    if (!g.has_undirected(bi, d)) continue;
                    for (int e = 0; e < n && !changed; ++e) {
                        if (e == d || !g.has_directed(d, e) || !g.has_directed(e, ci)) continue;
                        if (g.adjacent(bi, e) && !g.adjacent(ci, d)) changed = orienter.orient(bi, ci, "meek4");
                    }
                }
                if (changed) break;
            }
            if (changed) break;
        }
    }

    // remaining undirected edges with a single permissible direction
    std::vector<std::pair<int, int>> und(g.undirected.begin(), g.undirected.end());
    for (const auto& [x, y] : und) {
        bool xy = orienter.allowed(x, y);
        bool yx = orienter.allowed(y, x);
        if (xy && !yx)
            orienter.orient(x, y, "constraint");
        else if (yx && !xy)
            orienter.orient(y, x, "constraint");
    }

    // directed part must stay acyclic; un-orient cycle edges defensively
    for (;;) {
        CausalGraph check;
        for (const auto& v : vars) check.add_node(v);
        for (const auto& [f, t] : g.directed) check.add_directed(vars[f], vars[t]);
        CycleCheck cc = is_acyclic(check);
        if (cc.acyclic) break;
        int f = check.index_of(cc.cycle[0]);
        int t = check.index_of(cc.cycle[1]);
        g.directed.erase({f, t});
        g.undirected.insert({std::min(f, t), std::max(f, t)});
        g.conflicts.push_back("cycle broken at " + vars[f] + " -> " + vars[t] + ", kept undirected");
    }
    return g;
}

Cpdag pc(const std::vector<std::string>& vars, const CiTestFn& test, const PcOptions& opt) {
    return pc_orient(pc_skeleton(vars, test, opt.alpha, opt.constraints, opt.max_cond_size), opt.constraints);
}

CiTestFn make_ci_test(const std::string& name, const Dataset& ds, const KnnCmiOptions& knn_opt) {
    if (name == "fisher_z")
        return [&ds](const std::string& a, const std::string& b, const std::vector<std::string>& z) {
            return fisher_z(ds, a, b, z);
        };
    if (name == "chi2")
        return [&ds](const std::string& a, const std::string& b, const std::vector<std::string>& z) {
            return chi2_ci(ds, a, b, z);
        };
    if (name == "knn_cmi")
        return [&ds, knn_opt](const std::string& a, const std::string& b, const std::vector<std::string>& z) {
            return knn_cmi(ds, a, b, z, knn_opt);
        };
    throw std::invalid_argument("unknown ci test '" + name + "'");
}

ConfidenceMatrix bootstrap_confidences(const Dataset& ds, const BootstrapOptions& opt) {
    if (opt.runs < 1) throw std::invalid_argument("bootstrap_confidences: runs must be >= 1");
    if (ds.any_missing())
        throw std::invalid_argument("bootstrap_confidences: dataset has missing values, apply make_censoring first");

    const int n = static_cast<int>(ds.names.size());
    ConfidenceMatrix conf;
    conf.names = ds.names;
    conf.m = Eigen::MatrixXd::Zero(n, n);

    PcOptions pc_opt;
    pc_opt.alpha = opt.alpha;
    pc_opt.max_cond_size = opt.max_cond_size;
    pc_opt.constraints = opt.constraints;

    for (int run = 0; run < opt.runs; ++run) {
        Rng rng(mix_seed(opt.seed, static_cast<std::uint64_t>(run)));
        std::vector<Eigen::Index> rows(ds.n_rows());
        for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(ds.n_rows())));
        Dataset sample = take_rows(ds, rows);
        KnnCmiOptions ko = opt.knn;
        ko.seed = mix_seed(opt.seed, 0x7065726dULL + static_cast<std::uint64_t>(run));
        Cpdag cpdag = pc(ds.names, make_ci_test(opt.test, sample, ko), pc_opt);
        for (const auto& [f, t] : cpdag.directed) conf.m(f, t) += 1.0;
        for (const auto& [x, y] : cpdag.undirected) {
            conf.m(x, y) += 0.5;
            conf.m(y, x) += 0.5;
        }
    }
    conf.m /= static_cast<double>(opt.runs);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i == j || !opt.constraints.direction_allowed(ds.names[i], ds.names[j])) conf.m(i, j) = 0.0;
    return conf;
}

CausalGraph threshold_graph(const ConfidenceMatrix& conf, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw std::invalid_argument("threshold_graph: threshold must lie in [0, 1]");
    CausalGraph g;
    for (const auto& name : conf.names) g.add_node(name);
    for (int i = 0; i < conf.m.rows(); ++i)
        for (int j = 0; j < conf.m.cols(); ++j)
            if (i != j && conf.m(i, j) > threshold) g.add_directed(conf.names[i], conf.names[j]);
    return g;
}

namespace {

int pair_status(const CausalGraph& g, const std::string& a, const std::string& b) {
    // 0 none, 1 a->b, 2 b->a, 3 both
    int s = 0;
    if (g.has_directed(a, b)) s |= 1;
    if (g.has_directed(b, a)) s |= 2;
    return s;
}

int pair_cost(int s1, int s2) {
    // minimal insert/delete/reverse edits between the four pair states
    static const int cost[4][4] = {
        {0, 1, 1, 2},
        {1, 0, 1, 1},
        {1, 1, 0, 1},
        {2, 1, 1, 0},
    };
    return cost[s1][s2];
}

} // namespace

int shd(const CausalGraph& g1, const CausalGraph& g2) {
    if (!g1.bidirected().empty() || !g2.bidirected().empty())
        throw std::invalid_argument("shd: graphs must be purely directed");
    std::vector<std::string> n1 = g1.nodes(), n2 = g2.nodes();
    std::sort(n1.begin(), n1.end());
    std::sort(n2.begin(), n2.end());
    if (n1 != n2) throw std::invalid_argument("shd: node sets differ");

    int dist = 0;
    for (std::size_t i = 0; i < n1.size(); ++i)
        for (std::size_t j = i + 1; j < n1.size(); ++j)
            dist += pair_cost(pair_status(g1, n1[i], n1[j]), pair_status(g2, n1[i], n1[j]));
    return dist;
}

int shd_cpdag_best(const Cpdag& cpdag, const CausalGraph& dag) {
    std::vector<std::string> n1 = cpdag.nodes, n2 = dag.nodes();
    std::sort(n1.begin(), n1.end());
    std::sort(n2.begin(), n2.end());
    if (n1 != n2) throw std::invalid_argument("shd_cpdag_best: node sets differ");

    std::map<std::string, int> index;
    for (std::size_t i = 0; i < cpdag.nodes.size(); ++i) index[cpdag.nodes[i]] = static_cast<int>(i);

    int dist = 0;
    for (std::size_t i = 0; i < n1.size(); ++i) {
        for (std::size_t j = i + 1; j < n1.size(); ++j) {
            int a = index[n1[i]];
            int b = index[n1[j]];
            bool truth_ab = dag.has_directed(n1[i], n1[j]);
            bool truth_ba = dag.has_directed(n1[j], n1[i]);
            if (cpdag.has_undirected(a, b)) {
                if (!truth_ab && !truth_ba) dist += 1; // spurious adjacency
            } else if (cpdag.has_directed(a, b)) {
                if (truth_ba) dist += 1;
                else if (!truth_ab) dist += 1;
            } else if (cpdag.has_directed(b, a)) {
                if (truth_ab) dist += 1;
                else if (!truth_ba) dist += 1;
            } else {
                if (truth_ab || truth_ba) dist += 1; // missing adjacency
            }
        }
    }
    return dist;
}

std::vector<BenchmarkRow> benchmark_discovery(const ScmSpec& scm, const BenchmarkOptions& opt) {
    if (opt.reps < 1) throw std::invalid_argument("benchmark_discovery: reps must be >= 1");
    if (opt.sample_sizes.empty() || opt.tests.empty())
        throw std::invalid_argument("benchmark_discovery: need sample sizes and tests");
    CausalGraph truth = scm_graph(scm);

    std::vector<BenchmarkRow> rows;
    for (std::size_t ti = 0; ti < opt.tests.size(); ++ti) {
        for (std::size_t si = 0; si < opt.sample_sizes.size(); ++si) {
            Eigen::Index n = opt.sample_sizes[si];
            for (int rep = 0; rep < opt.reps; ++rep) {
                std::uint64_t draw_seed =
                    mix_seed(opt.seed, (static_cast<std::uint64_t>(ti) << 40) ^
                                           (static_cast<std::uint64_t>(si) << 20) ^ static_cast<std::uint64_t>(rep));
                Dataset ds = sample_scm(scm, n, draw_seed);
                KnnCmiOptions ko = opt.knn;
                ko.seed = mix_seed(draw_seed, 0x6287ULL);
                PcOptions pc_opt;
                pc_opt.alpha = opt.alpha;
                pc_opt.max_cond_size = opt.max_cond_size;
                auto t0 = std::chrono::steady_clock::now();
                Cpdag cpdag = pc(ds.names, make_ci_test(opt.tests[ti], ds, ko), pc_opt);
                auto t1 = std::chrono::steady_clock::now();
                double secs = std::chrono::duration<double>(t1 - t0).count();
                rows.push_back({opt.tests[ti], n, rep, shd_cpdag_best(cpdag, truth), secs});
            }
        }
    }
    return rows;
}

} // namespace causal
