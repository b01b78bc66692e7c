#ifndef CAUSAL_GRAPH_HPP
#define CAUSAL_GRAPH_HPP

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace causal {

// Acyclic directed mixed graph. Directed edges carry plausibility 1.0 by
// construction; bidirected edges carry a plausibility in (0, 1].
class CausalGraph {
  public:
    struct BidirectedEdge {
        int a; // a < b, indices into nodes()
        int b;
        double plausibility;
    };

    void add_node(const std::string& name);
    void add_directed(const std::string& from, const std::string& to);
    void add_bidirected(const std::string& a, const std::string& b, double plausibility);

    bool has_node(const std::string& name) const;
    int index_of(const std::string& name) const; // throws on unknown name
    const std::vector<std::string>& nodes() const { return m_names; }
    int num_nodes() const { return static_cast<int>(m_names.size()); }

    bool has_directed(const std::string& from, const std::string& to) const;
    bool has_bidirected(const std::string& a, const std::string& b) const;
    double bidirected_plausibility(const std::string& a, const std::string& b) const;

    // index-level adjacency, ascending (= declaration) order
    const std::vector<int>& parent_ids(int v) const { return m_parents[v]; }
    const std::vector<int>& child_ids(int v) const { return m_children[v]; }
    const std::vector<BidirectedEdge>& bidirected() const { return m_bidirected; }
    std::vector<int> sibling_ids(int v) const; // bidirected neighbours

    std::vector<std::pair<std::string, std::string>> directed_edges() const;
    int num_directed() const { return m_num_directed; }

    std::vector<std::string> parents(const std::string& name) const;
    std::vector<std::string> children(const std::string& name) const;
    // proper ancestors / descendants via directed edges only
    std::vector<std::string> ancestors(const std::string& name) const;
    std::vector<std::string> descendants(const std::string& name) const;
    std::vector<int> ancestor_ids(int v) const;
    std::vector<int> descendant_ids(int v) const;

    bool operator==(const CausalGraph& other) const;
    bool operator!=(const CausalGraph& other) const { return !(*this == other); }

  private:
    std::vector<std::string> m_names;
    std::unordered_map<std::string, int> m_index;
    std::vector<std::vector<int>> m_parents;
    std::vector<std::vector<int>> m_children;
    std::vector<BidirectedEdge> m_bidirected;
    int m_num_directed = 0;
};

struct CycleCheck {
    bool acyclic;
    std::vector<std::string> cycle; // witness, empty when acyclic
};

CycleCheck is_acyclic(const CausalGraph& g);

// Time-unrolls a possibly cyclic summary graph into an acyclic graph over
// node copies X@0 .. X@n_lags.
CausalGraph unroll(const CausalGraph& g, int n_lags);

// m-separation; bidirected edges are canonicalized into hidden forks first.
bool d_separated(const CausalGraph& g, const std::vector<std::string>& xs,
                 const std::vector<std::string>& ys, const std::vector<std::string>& zs);

struct Factor {
    std::string child;
    std::vector<std::string> parents; // declaration order
};

std::vector<Factor> markov_factorization(const CausalGraph& g);
std::string render_factorization(const std::vector<Factor>& factors);

CausalGraph latent_project(const CausalGraph& g, const std::vector<std::string>& keep);

struct PlausibilityRatio {
    double full;     // plausibility of the input graph
    double subgraph; // plausibility after the removals
    double ratio;    // subgraph / full, exactly 1.0 for no removals
};

PlausibilityRatio graph_plausibility(const CausalGraph& g,
                                     const std::vector<std::pair<std::string, std::string>>& removed_bidirected);

CausalGraph parse_graph(const std::string& text);
CausalGraph load_graph(const std::string& path);
std::string serialize_graph(const CausalGraph& g);

} // namespace causal

#endif // CAUSAL_GRAPH_HPP
