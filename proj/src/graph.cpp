#include "causal/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "causal/util.hpp"

namespace causal {

namespace {

std::vector<std::string> names_of(const CausalGraph& g, const std::vector<int>& ids) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int v : ids) out.push_back(g.nodes()[v]);
    return out;
}

// reachability over a child-list view, excluding the start node
std::vector<int> reach(const std::vector<std::vector<int>>& adj, int start) {
    std::vector<char> seen(adj.size(), 0);
    std::deque<int> queue{start};
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                queue.push_back(w);
            }
    }
    std::vector<int> out;
    for (std::size_t v = 0; v < adj.size(); ++v)
        if (seen[v] && static_cast<int>(v) != start) out.push_back(static_cast<int>(v));
    return out;
}

} // namespace

void CausalGraph::add_node(const std::string& name) {
    if (!valid_node_name(name)) throw std::invalid_argument("add_node: invalid name '" + name + "'");
    if (m_index.count(name)) throw std::invalid_argument("add_node: duplicate node '" + name + "'");
    m_index.emplace(name, static_cast<int>(m_names.size()));
    m_names.push_back(name);
    m_parents.emplace_back();
    m_children.emplace_back();
}

int CausalGraph::index_of(const std::string& name) const {
    auto it = m_index.find(name);
    if (it == m_index.end()) throw std::invalid_argument("unknown node '" + name + "'");
    return it->second;
}

bool CausalGraph::has_node(const std::string& name) const { return m_index.count(name) > 0; }

void CausalGraph::add_directed(const std::string& from, const std::string& to) {
    int f = index_of(from);
    int t = index_of(to);
    if (f == t) throw std::invalid_argument("add_directed: self-loop on '" + from + "'");
    if (has_directed(from, to)) throw std::invalid_argument("add_directed: duplicate edge " + from + " -> " + to);
    m_children[f].insert(std::lower_bound(m_children[f].begin(), m_children[f].end(), t), t);
    m_parents[t].insert(std::lower_bound(m_parents[t].begin(), m_parents[t].end(), f), f);
    ++m_num_directed;
}

void CausalGraph::add_bidirected(const std::string& a, const std::string& b, double plausibility) {
    int i = index_of(a);
    int j = index_of(b);
    if (i == j) throw std::invalid_argument("add_bidirected: self-loop on '" + a + "'");
    if (!(plausibility > 0.0 && plausibility <= 1.0))
        throw std::invalid_argument("add_bidirected: plausibility must lie in (0, 1]");
    if (has_bidirected(a, b)) throw std::invalid_argument("add_bidirected: duplicate edge " + a + " <-> " + b);
    BidirectedEdge e{std::min(i, j), std::max(i, j), plausibility};
    auto pos = std::lower_bound(m_bidirected.begin(), m_bidirected.end(), e, [](const BidirectedEdge& x, const BidirectedEdge& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    m_bidirected.insert(pos, e);
}

bool CausalGraph::has_directed(const std::string& from, const std::string& to) const {
    int f = index_of(from);
    int t = index_of(to);
    return std::binary_search(m_children[f].begin(), m_children[f].end(), t);
}

bool CausalGraph::has_bidirected(const std::string& a, const std::string& b) const {
    int i = index_of(a);
    int j = index_of(b);
    if (i > j) std::swap(i, j);
    for (const auto& e : m_bidirected)
        if (e.a == i && e.b == j) return true;
    return false;
}

double CausalGraph::bidirected_plausibility(const std::string& a, const std::string& b) const {
    int i = index_of(a);
    int j = index_of(b);
    if (i > j) std::swap(i, j);
    for (const auto& e : m_bidirected)
        if (e.a == i && e.b == j) return e.plausibility;
    throw std::invalid_argument("no bidirected edge " + a + " <-> " + b);
}

std::vector<int> CausalGraph::sibling_ids(int v) const {
    std::vector<int> out;
    for (const auto& e : m_bidirected) {
        if (e.a == v) out.push_back(e.b);
        if (e.b == v) out.push_back(e.a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<std::string, std::string>> CausalGraph::directed_edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (int f = 0; f < num_nodes(); ++f)
        for (int t : m_children[f]) out.emplace_back(m_names[f], m_names[t]);
    return out;
}

std::vector<std::string> CausalGraph::parents(const std::string& name) const {
    return names_of(*this, m_parents[index_of(name)]);
}

std::vector<std::string> CausalGraph::children(const std::string& name) const {
    return names_of(*this, m_children[index_of(name)]);
}

std::vector<int> CausalGraph::ancestor_ids(int v) const { return reach(m_parents, v); }

std::vector<int> CausalGraph::descendant_ids(int v) const { return reach(m_children, v); }

std::vector<std::string> CausalGraph::ancestors(const std::string& name) const {
    return names_of(*this, ancestor_ids(index_of(name)));
}

std::vector<std::string> CausalGraph::descendants(const std::string& name) const {
    return names_of(*this, descendant_ids(index_of(name)));
}

bool CausalGraph::operator==(const CausalGraph& other) const {
    std::vector<std::string> a = m_names, b = other.m_names;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return false;
    auto edge_key = [](const CausalGraph& g) {
        std::set<std::pair<std::string, std::string>> dir;
        for (auto& e : g.directed_edges()) dir.insert(e);
        std::map<std::pair<std::string, std::string>, double> bi;
        for (auto& e : g.bidirected()) {
            std::string x = g.nodes()[e.a], y = g.nodes()[e.b];
            if (x > y) std::swap(x, y);
            bi[{x, y}] = e.plausibility;
        }
        return std::make_pair(dir, bi);
    };
    return edge_key(*this) == edge_key(other);
}

CycleCheck is_acyclic(const CausalGraph& g) {
    const int n = g.num_nodes();
    std::vector<int> color(n, 0); // 0 white, 1 on stack, 2 done
    std::vector<int> stack, pos_in_stack(n, -1);

    // iterative DFS keeping the grey path for a cycle witness
    for (int root = 0; root < n; ++root) {
        if (color[root] != 0) continue;
        std::vector<std::pair<int, std::size_t>> frames{{root, 0}};
        color[root] = 1;
        pos_in_stack[root] = static_cast<int>(stack.size());
        stack.push_back(root);
        while (!frames.empty()) {
            auto& [v, childpos] = frames.back();
            const auto& kids = g.child_ids(v);
            if (childpos < kids.size()) {
                int w = kids[childpos++];
                if (color[w] == 1) {
                    std::vector<std::string> cycle;
                    for (std::size_t i = pos_in_stack[w]; i < stack.size(); ++i) cycle.push_back(g.nodes()[stack[i]]);
                    cycle.push_back(g.nodes()[w]);
                    return {false, cycle};
                }
                if (color[w] == 0) {
                    color[w] = 1;
                    pos_in_stack[w] = static_cast<int>(stack.size());
                    stack.push_back(w);
                    frames.emplace_back(w, 0);
                }
            } else {
                color[v] = 2;
                pos_in_stack[v] = -1;
                stack.pop_back();
                frames.pop_back();
            }
        }
    }
    return {true, {}};
}

CausalGraph unroll(const CausalGraph& g, int n_lags) {
    if (n_lags < 1) throw std::invalid_argument("unroll: n_lags must be >= 1");
    const int n = g.num_nodes();

    // an edge u->v sits on a cycle iff u is reachable back from v
    std::vector<std::vector<char>> reachable(n, std::vector<char>(n, 0));
    for (int v = 0; v < n; ++v)
        for (int d : g.descendant_ids(v)) reachable[v][d] = 1;

    auto slice_name = [&](int v, int k) { return g.nodes()[v] + "@" + std::to_string(k); };

    CausalGraph out;
    for (int k = 0; k <= n_lags; ++k)
        for (int v = 0; v < n; ++v) out.add_node(slice_name(v, k));

    for (int v = 0; v < n; ++v)
        for (int k = 0; k < n_lags; ++k) out.add_directed(slice_name(v, k), slice_name(v, k + 1));

    for (int u = 0; u < n; ++u) {
        for (int v : g.child_ids(u)) {
            bool on_cycle = reachable[v][u] != 0;
            for (int k = 0; k < n_lags; ++k) out.add_directed(slice_name(u, k), slice_name(v, k + 1));
            if (!on_cycle)
                for (int k = 0; k <= n_lags; ++k) out.add_directed(slice_name(u, k), slice_name(v, k));
        }
    }

    // bidirected confounding acts within a slice; replicate per slice
    for (const auto& e : g.bidirected())
        for (int k = 0; k <= n_lags; ++k)
            out.add_bidirected(slice_name(e.a, k), slice_name(e.b, k), e.plausibility);

    CycleCheck check = is_acyclic(out);
    if (!check.acyclic) throw std::logic_error("unroll: produced a cyclic graph");
    return out;
}

bool d_separated(const CausalGraph& g, const std::vector<std::string>& xs,
                 const std::vector<std::string>& ys, const std::vector<std::string>& zs) {
    if (xs.empty() || ys.empty()) throw std::invalid_argument("d_separated: X and Y must be nonempty");
    CycleCheck check = is_acyclic(g);
    if (!check.acyclic) throw std::invalid_argument("d_separated: directed part is cyclic");

    const int n = g.num_nodes();
    std::set<int> xset, yset, zset;
    for (const auto& s : xs) xset.insert(g.index_of(s));
    for (const auto& s : ys) yset.insert(g.index_of(s));
    for (const auto& s : zs) zset.insert(g.index_of(s));
    for (int v : xset)
        if (yset.count(v) || zset.count(v)) throw std::invalid_argument("d_separated: X, Y, Z must be disjoint");
    for (int v : yset)
        if (zset.count(v)) throw std::invalid_argument("d_separated: X, Y, Z must be disjoint");

    // canonical DAG: one hidden fork per bidirected edge
    const int m = static_cast<int>(g.bidirected().size());
    const int total = n + m;
    std::vector<std::vector<int>> parents(total), children(total);
    for (int v = 0; v < n; ++v) {
        parents[v].assign(g.parent_ids(v).begin(), g.parent_ids(v).end());
        children[v].assign(g.child_ids(v).begin(), g.child_ids(v).end());
    }
    for (int i = 0; i < m; ++i) {
        int h = n + i;
        const auto& e = g.bidirected()[i];
        children[h] = {e.a, e.b};
        parents[e.a].push_back(h);
        parents[e.b].push_back(h);
    }

    // ancestors of Z, including Z, in the canonical DAG
    std::vector<char> anc_z(total, 0);
    std::deque<int> queue;
    for (int z : zset) {
        anc_z[z] = 1;
        queue.push_back(z);
    }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int p : parents[v])
            if (!anc_z[p]) {
                anc_z[p] = 1;
                queue.push_back(p);
            }
    }

    // reachability over active trails; state = (node, arrived-from-child?)
    auto in_z = [&](int v) { return v < n && zset.count(v) > 0; };
    std::vector<char> seen_up(total, 0), seen_down(total, 0);
    std::deque<std::pair<int, bool>> frontier; // bool: true = arrived from a child
    for (int x : xset) frontier.emplace_back(x, true);
    while (!frontier.empty()) {
        auto [v, from_child] = frontier.front();
        frontier.pop_front();
        auto& seen = from_child ? seen_up : seen_down;
        if (seen[v]) continue;
        seen[v] = 1;
        if (v < n && yset.count(v)) return false;
        if (from_child) {
            if (!in_z(v)) {
                for (int p : parents[v]) frontier.emplace_back(p, true);
                for (int c : children[v]) frontier.emplace_back(c, false);
            }
        } else {
            if (!in_z(v))
                for (int c : children[v]) frontier.emplace_back(c, false);
            // collider: passable when v is in Z or has a descendant in Z
            if (anc_z[v])
                for (int p : parents[v]) frontier.emplace_back(p, true);
        }
    }
    return true;
}

std::vector<Factor> markov_factorization(const CausalGraph& g) {
    if (!g.bidirected().empty())
        throw std::invalid_argument("markov_factorization: graph has bidirected edges");
    CycleCheck check = is_acyclic(g);
    if (!check.acyclic) throw std::invalid_argument("markov_factorization: graph is cyclic");

    // Kahn's algorithm, always popping the smallest declaration index
    const int n = g.num_nodes();
    std::vector<int> indeg(n, 0);
    for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(g.parent_ids(v).size());
    std::set<int> ready;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.insert(v);
    std::vector<Factor> out;
    while (!ready.empty()) {
        int v = *ready.begin();
        ready.erase(ready.begin());
        out.push_back({g.nodes()[v], names_of(g, {g.parent_ids(v).begin(), g.parent_ids(v).end()})});
        for (int c : g.child_ids(v))
            if (--indeg[c] == 0) ready.insert(c);
    }
    return out;
}

std::string render_factorization(const std::vector<Factor>& factors) {
    std::string out;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i) out += "·";
        out += "P(" + factors[i].child;
        if (!factors[i].parents.empty()) {
            out += "|";
            for (std::size_t j = factors[i].parents.size(); j-- > 0;) {
                out += factors[i].parents[j];
                if (j) out += ",";
            }
        }
        out += ")";
    }
    return out;
}

CausalGraph latent_project(const CausalGraph& g, const std::vector<std::string>& keep) {
    CycleCheck check = is_acyclic(g);
    if (!check.acyclic) throw std::invalid_argument("latent_project: directed part is cyclic");
    std::set<int> keep_ids;
    for (const auto& s : keep) {
        int v = g.index_of(s);
        if (!keep_ids.insert(v).second) throw std::invalid_argument("latent_project: duplicate keep node '" + s + "'");
    }

    // working edge maps; directed edges all carry weight 1.0
    std::map<std::pair<int, int>, double> dir;
    std::map<std::pair<int, int>, double> bi; // key has a < b
    for (int v = 0; v < g.num_nodes(); ++v)
        for (int c : g.child_ids(v)) dir[{v, c}] = 1.0;
    for (const auto& e : g.bidirected()) bi[{e.a, e.b}] = e.plausibility;

    auto merge_max = [](std::map<std::pair<int, int>, double>& m, std::pair<int, int> k, double w) {
        auto it = m.find(k);
        if (it == m.end())
            m.emplace(k, w);
        else
            it->second = std::max(it->second, w);
    };

    // marginalize hidden nodes one at a time; max-product over generating
    // paths composes across eliminations
    for (int u = 0; u < g.num_nodes(); ++u) {
        if (keep_ids.count(u)) continue;
        struct Incident {
            int other;
            bool head_at_u;
            bool head_at_other;
            double w;
        };
        std::vector<Incident> inc;
        for (auto it = dir.begin(); it != dir.end();) {
            auto [from, to] = it->first;
            if (from == u) {
                inc.push_back({to, false, true, it->second});
                it = dir.erase(it);
            } else if (to == u) {
                inc.push_back({from, true, false, it->second});
                it = dir.erase(it);
            } else {
                ++it;
            }
        }
        for (auto it = bi.begin(); it != bi.end();) {
            auto [a, b] = it->first;
            if (a == u || b == u) {
                inc.push_back({a == u ? b : a, true, true, it->second});
                it = bi.erase(it);
            } else {
                ++it;
            }
        }
        for (std::size_t i = 0; i < inc.size(); ++i) {
            for (std::size_t j = 0; j < inc.size(); ++j) {
                if (i == j) continue;
                const Incident& e1 = inc[i];
                const Incident& e2 = inc[j];
                if (e1.other == e2.other) continue;
                if (e1.head_at_u && e2.head_at_u) continue; // u would be a collider
                int x = e1.other, y = e2.other;
                double w = e1.w * e2.w;
                if (!e1.head_at_other && e2.head_at_other)
                    merge_max(dir, {x, y}, w);
                else if (e1.head_at_other && e2.head_at_other)
                    merge_max(bi, {std::min(x, y), std::max(x, y)}, w);
                // tail at both ends cannot arise: it would need two heads at u
            }
        }
    }

    CausalGraph out;
    std::vector<int> kept;
    for (int v = 0; v < g.num_nodes(); ++v)
        if (keep_ids.count(v)) {
            out.add_node(g.nodes()[v]);
            kept.push_back(v);
        }
    for (const auto& [k, w] : dir) out.add_directed(g.nodes()[k.first], g.nodes()[k.second]);
    for (const auto& [k, w] : bi) out.add_bidirected(g.nodes()[k.first], g.nodes()[k.second], w);
    return out;
}

PlausibilityRatio graph_plausibility(const CausalGraph& g,
                                     const std::vector<std::pair<std::string, std::string>>& removed_bidirected) {
    std::set<std::pair<int, int>> removed;
    for (const auto& [a, b] : removed_bidirected) {
        int i = g.index_of(a);
        int j = g.index_of(b);
        if (i > j) std::swap(i, j);
        if (!g.has_bidirected(a, b))
            throw std::invalid_argument("graph_plausibility: no bidirected edge " + a + " <-> " + b);
        if (!removed.insert({i, j}).second)
            throw std::invalid_argument("graph_plausibility: duplicate removal " + a + " <-> " + b);
    }
    double full = 1.0;
    double sub = 1.0;
    double ratio = 1.0;
    for (const auto& e : g.bidirected()) {
        full *= e.plausibility;
        if (removed.count({e.a, e.b})) {
            sub *= 1.0 - e.plausibility;
            ratio *= (1.0 - e.plausibility) / e.plausibility;
        } else {
            sub *= e.plausibility;
        }
    }
    return {full, sub, ratio};
}

CausalGraph parse_graph(const std::string& text) {
    CausalGraph g;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("graph parse error at line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = strip_comment(raw);
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        std::string t;
        while (ls >> t) tok.push_back(t);
        try {
            if (tok[0] == "node") {
                if (tok.size() != 2) fail("expected 'node NAME'");
                g.add_node(tok[1]);
            } else if (tok.size() >= 3 && tok[1] == "->") {
                if (tok.size() > 4) fail("too many tokens on edge line");
                if (tok.size() == 4) {
                    double p = parse_double(tok[3], "plausibility");
                    if (p != 1.0) fail("directed edges have plausibility 1.0");
                }
                g.add_directed(tok[0], tok[2]);
            } else if (tok.size() >= 3 && tok[1] == "<->") {
                if (tok.size() != 4) fail("expected 'A <-> B PLAUSIBILITY'");
                g.add_bidirected(tok[0], tok[2], parse_double(tok[3], "plausibility"));
            } else {
                fail("unrecognized statement '" + tok[0] + "'");
            }
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        } catch (const std::runtime_error& e) {
            fail(e.what());
        }
    }
    return g;
}

CausalGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_graph(ss.str());
}

std::string serialize_graph(const CausalGraph& g) {
    std::vector<std::string> nodes = g.nodes();
    std::sort(nodes.begin(), nodes.end());
    std::string out;
    for (const auto& n : nodes) out += "node " + n + "\n";
    auto dir = g.directed_edges();
    std::sort(dir.begin(), dir.end());
    for (const auto& [f, t] : dir) out += f + " -> " + t + "\n";
    std::vector<std::tuple<std::string, std::string, double>> bi;
    for (const auto& e : g.bidirected()) {
        std::string a = g.nodes()[e.a], b = g.nodes()[e.b];
        if (a > b) std::swap(a, b);
        bi.emplace_back(a, b, e.plausibility);
    }
    std::sort(bi.begin(), bi.end());
    for (const auto& [a, b, p] : bi) out += a + " <-> " + b + " " + format_double(p) + "\n";
    return out;
}

} // namespace causal
