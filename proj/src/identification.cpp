#include "causal/identification.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "causal/util.hpp"

namespace causal {

namespace {

constexpr int kMaxSearchNodes = 22;

bool next_combination(std::vector<int>& idx, int n) {
    int k = static_cast<int>(idx.size());
    for (int i = k - 1; i >= 0; --i) {
        if (idx[i] < n - (k - i)) {
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

bool head_at_right(StepKind s) { return s == StepKind::Forward || s == StepKind::Bidirected; }
bool head_at_left(StepKind s) { return s == StepKind::Backward || s == StepKind::Bidirected; }

struct Move {
    std::string to;
    StepKind kind;
};

std::vector<Move> moves_from(const CausalGraph& g, const std::string& v) {
    std::vector<Move> out;
    for (const auto& w : g.children(v)) out.push_back({w, StepKind::Forward});
    for (const auto& w : g.parents(v)) out.push_back({w, StepKind::Backward});
    for (int s : g.sibling_ids(g.index_of(v))) out.push_back({g.nodes()[s], StepKind::Bidirected});
    std::sort(out.begin(), out.end(), [](const Move& a, const Move& b) {
        if (a.to != b.to) return a.to < b.to;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    return out;
}

std::vector<std::string> path_colliders(const std::vector<std::string>& nodes,
                                        const std::vector<StepKind>& steps) {
    std::vector<std::string> out;
    for (size_t i = 1; i + 1 < nodes.size(); ++i)
        if (head_at_right(steps[i - 1]) && head_at_left(steps[i])) out.push_back(nodes[i]);
    return out;
}

CausalGraph cut_outgoing(const CausalGraph& g, const std::string& t) {
    CausalGraph h;
    for (const auto& n : g.nodes()) h.add_node(n);
    for (const auto& n : g.nodes()) {
        if (n == t) continue;
        for (const auto& c : g.children(n)) h.add_directed(n, c);
    }
    for (const auto& e : g.bidirected()) h.add_bidirected(g.nodes()[e.a], g.nodes()[e.b], e.plausibility);
    return h;
}

void check_pair(const CausalGraph& g, const std::string& t, const std::string& y) {
    g.index_of(t);
    g.index_of(y);
    if (t == y) throw std::invalid_argument("treatment and outcome must differ, got '" + t + "' twice");
}

// nodes that can appear in a minimal backdoor set: non-collider occupants of
// backdoor paths that are not descendants of the treatment
std::vector<std::string> adjustment_candidates(const CausalGraph& g, const std::string& t,
                                               const std::string& y,
                                               const std::vector<BackdoorPath>& paths) {
    std::set<std::string> pool;
    for (const auto& p : paths) {
        std::set<std::string> coll(p.colliders.begin(), p.colliders.end());
        for (size_t i = 1; i + 1 < p.nodes.size(); ++i)
            if (!coll.count(p.nodes[i])) pool.insert(p.nodes[i]);
    }
    for (const auto& d : g.descendants(t)) pool.erase(d);
    pool.erase(t);
    pool.erase(y);
    return {pool.begin(), pool.end()};
}

} // namespace

void validate_estimand(const EstimandSpec& spec) {
    if (spec.treatment.empty()) throw std::invalid_argument("estimand needs a treatment variable");
    if (spec.outcome.empty()) throw std::invalid_argument("estimand needs an outcome variable");
    if (spec.treatment == spec.outcome)
        throw std::invalid_argument("treatment and outcome must differ, got '" + spec.treatment + "' twice");
    if (spec.contrasts.empty()) throw std::invalid_argument("estimand needs at least one contrast");
    for (const auto& [t, t_ref] : spec.contrasts)
        if (t == t_ref)
            throw std::invalid_argument("contrast compares level " + format_double(t) + " with itself");
    std::set<std::string> seen;
    for (const auto& c : spec.adjustment) {
        if (c == spec.treatment || c == spec.outcome)
            throw std::invalid_argument("adjustment set may not contain '" + c + "'");
        if (!seen.insert(c).second) throw std::invalid_argument("duplicate adjustment variable '" + c + "'");
    }
    for (const auto& r : spec.precision) {
        if (r == spec.treatment || r == spec.outcome)
            throw std::invalid_argument("precision set may not contain '" + r + "'");
        if (!seen.insert(r).second)
            throw std::invalid_argument("'" + r + "' appears twice across adjustment and precision sets");
    }
}

std::string render_path(const BackdoorPath& p) {
    std::string out = p.nodes.empty() ? std::string() : p.nodes[0];
    for (size_t i = 0; i < p.steps.size(); ++i) {
        switch (p.steps[i]) {
            case StepKind::Forward: out += " -> "; break;
            case StepKind::Backward: out += " <- "; break;
            case StepKind::Bidirected: out += " <-> "; break;
        }
        out += p.nodes[i + 1];
    }
    return out;
}

std::vector<BackdoorPath> backdoor_paths(const CausalGraph& g, const std::string& treatment,
                                         const std::string& outcome) {
    check_pair(g, treatment, outcome);
    std::vector<BackdoorPath> found;
    std::vector<std::string> nodes{treatment};
    std::vector<StepKind> steps;
    std::set<std::string> on_path{treatment};

    auto dfs = [&](auto&& self, const std::string& v) -> void {
        for (const auto& m : moves_from(g, v)) {
            if (nodes.size() == 1 && !head_at_left(m.kind)) continue; // first edge must point into T
            if (m.to == outcome) {
                nodes.push_back(m.to);
                steps.push_back(m.kind);
                found.push_back({nodes, steps, path_colliders(nodes, steps)});
                nodes.pop_back();
                steps.pop_back();
                continue;
            }
            if (on_path.count(m.to)) continue;
            nodes.push_back(m.to);
            steps.push_back(m.kind);
            on_path.insert(m.to);
            self(self, m.to);
            on_path.erase(m.to);
            nodes.pop_back();
            steps.pop_back();
        }
    };
    dfs(dfs, treatment);
    return found;
}

bool is_backdoor_set(const CausalGraph& g, const std::string& treatment, const std::string& outcome,
                     const std::vector<std::string>& z) {
    check_pair(g, treatment, outcome);
    std::set<std::string> zs;
    for (const auto& v : z) {
        g.index_of(v);
        if (v == treatment || v == outcome)
            throw std::invalid_argument("adjustment set may not contain '" + v + "'");
        if (!zs.insert(v).second) throw std::invalid_argument("duplicate adjustment variable '" + v + "'");
    }
    for (const auto& d : g.descendants(treatment))
        if (zs.count(d)) return false;
    return d_separated(cut_outgoing(g, treatment), {treatment}, {outcome}, z);
}

std::optional<std::vector<std::string>> find_backdoor_set(const CausalGraph& g,
                                                          const std::string& treatment,
                                                          const std::string& outcome) {
    auto paths = backdoor_paths(g, treatment, outcome);
    auto cand = adjustment_candidates(g, treatment, outcome, paths);
    int n = static_cast<int>(cand.size());
    if (n > kMaxSearchNodes)
        throw std::runtime_error("adjustment-set search over " + std::to_string(n) +
                                 " candidates is too large");
    for (int k = 0; k <= n; ++k) {
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        do {
            std::vector<std::string> z;
            for (int i : idx) z.push_back(cand[i]);
            if (is_backdoor_set(g, treatment, outcome, z)) return z;
        } while (k > 0 && next_combination(idx, n));
    }
    return std::nullopt;
}

RoleReport classify_variables(const CausalGraph& g, const std::string& treatment,
                              const std::string& outcome) {
    check_pair(g, treatment, outcome);
    RoleReport rep;
    auto paths = backdoor_paths(g, treatment, outcome);
    for (const auto& p : paths)
        if (p.colliders.empty()) rep.open_backdoor_paths.push_back(p);

    auto chosen = find_backdoor_set(g, treatment, outcome);
    rep.identifiable = chosen.has_value();
    if (chosen) rep.chosen_adjustment = *chosen;

    // union of all minimal valid adjustment sets
    std::set<std::string> confounders;
    auto cand = adjustment_candidates(g, treatment, outcome, paths);
    int n = static_cast<int>(cand.size());
    if (rep.identifiable && n <= kMaxSearchNodes) {
        std::vector<std::set<std::string>> valid_sets;
        for (int k = 0; k <= n; ++k) {
            std::vector<int> idx(k);
            for (int i = 0; i < k; ++i) idx[i] = i;
            do {
                std::vector<std::string> z;
                for (int i : idx) z.push_back(cand[i]);
                if (is_backdoor_set(g, treatment, outcome, z)) valid_sets.emplace_back(z.begin(), z.end());
            } while (k > 0 && next_combination(idx, n));
        }
        for (const auto& s : valid_sets) {
            bool minimal = true;
            for (const auto& o : valid_sets) {
                if (o.size() >= s.size()) continue;
                if (std::includes(s.begin(), s.end(), o.begin(), o.end())) {
                    minimal = false;
                    break;
                }
            }
            if (minimal) confounders.insert(s.begin(), s.end());
        }
    }

    std::set<std::string> desc_t, anc_t, desc_y, anc_y;
    for (const auto& v : g.descendants(treatment)) desc_t.insert(v);
    for (const auto& v : g.ancestors(treatment)) anc_t.insert(v);
    for (const auto& v : g.descendants(outcome)) desc_y.insert(v);
    for (const auto& v : g.ancestors(outcome)) anc_y.insert(v);
    std::set<std::string> path_colliders_all;
    for (const auto& p : paths)
        for (const auto& c : p.colliders) path_colliders_all.insert(c);

    CausalGraph cut = cut_outgoing(g, treatment);
    std::set<std::string> anc_y_cut;
    for (const auto& v : cut.ancestors(outcome)) anc_y_cut.insert(v);

    for (const auto& v : g.nodes()) {
        if (v == treatment || v == outcome) continue;
        std::string role = "other";
        if (confounders.count(v)) {
            role = "confounder";
        } else if (desc_t.count(v) && anc_y.count(v)) {
            role = "mediator";
        } else if (anc_t.count(v) && !anc_y_cut.count(v)) {
            std::vector<std::string> cond{treatment};
            for (const auto& c : rep.chosen_adjustment)
                if (c != v) cond.push_back(c);
            if (d_separated(g, {v}, {outcome}, cond)) role = "instrument";
        }
        if (role == "other" && anc_y.count(v) && d_separated(g, {v}, {treatment}, {})) role = "precision";
        if (role == "other" && ((desc_t.count(v) && desc_y.count(v)) || path_colliders_all.count(v)))
            role = "collider-risk";
        rep.roles[v] = role;
    }
    return rep;
}

PlausibleSubgraph most_plausible_backdoor_subgraph(const CausalGraph& g, const std::string& treatment,
                                                   const std::string& outcome) {
    check_pair(g, treatment, outcome);
    const auto& edges = g.bidirected();
    int m = static_cast<int>(edges.size());
    if (m > kMaxSearchNodes)
        throw std::runtime_error("subgraph search over " + std::to_string(m) +
                                 " bidirected edges is too large");

    struct Option {
        double retained;
        std::vector<int> removed; // edge indices, ascending
    };
    std::vector<Option> opts;
    opts.reserve(size_t(1) << m);
    for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
        Option o;
        o.retained = 1.0;
        for (int i = 0; i < m; ++i) {
            if (mask & (1ul << i)) {
                o.retained *= 1.0 - edges[i].plausibility;
                o.removed.push_back(i);
            } else {
                o.retained *= edges[i].plausibility;
            }
        }
        opts.push_back(std::move(o));
    }
    std::sort(opts.begin(), opts.end(), [](const Option& a, const Option& b) {
        if (a.retained != b.retained) return a.retained > b.retained;
        if (a.removed.size() != b.removed.size()) return a.removed.size() < b.removed.size();
        return a.removed < b.removed;
    });

    for (const auto& o : opts) {
        CausalGraph h;
        for (const auto& nm : g.nodes()) h.add_node(nm);
        for (const auto& nm : g.nodes())
            for (const auto& c : g.children(nm)) h.add_directed(nm, c);
        std::set<int> gone(o.removed.begin(), o.removed.end());
        for (int i = 0; i < m; ++i)
            if (!gone.count(i))
                h.add_bidirected(g.nodes()[edges[i].a], g.nodes()[edges[i].b], edges[i].plausibility);
        auto z = find_backdoor_set(h, treatment, outcome);
        if (!z) continue;
        PlausibleSubgraph out;
        out.graph = std::move(h);
        for (int i : o.removed) out.removed.emplace_back(g.nodes()[edges[i].a], g.nodes()[edges[i].b]);
        out.ratio = graph_plausibility(g, out.removed).ratio;
        out.adjustment = std::move(*z);
        return out;
    }
    // reachable only when the outcome is a direct cause of the treatment: the
    // backdoor path through that edge has no interior node and survives every removal
    throw std::runtime_error("no removal of bidirected arcs identifies the effect of '" +
                             treatment + "' on '" + outcome + "'");
}

std::string render_estimand(const EstimandSpec& spec) {
    validate_estimand(spec);
    std::vector<std::string> cond = spec.adjustment;
    cond.insert(cond.end(), spec.precision.begin(), spec.precision.end());

    std::string cset;
    for (size_t i = 0; i < cond.size(); ++i) {
        if (i) cset += ",";
        cset += cond[i];
    }
    std::string out;
    for (const auto& [t, t_ref] : spec.contrasts) {
        if (!out.empty()) out += "\n";
        std::string label = format_double(t) + "-" + format_double(t_ref);
        out += "psi_" + label + " = ";
        if (cond.empty()) {
            out += "E[" + spec.outcome + "|" + spec.treatment + "=" + format_double(t) + "] − E[" +
                   spec.outcome + "|" + spec.treatment + "=" + format_double(t_ref) + "]";
        } else {
            std::string sub = cond.size() == 1 ? cset : "{" + cset + "}";
            out += "E_" + sub + "[E[" + spec.outcome + "|" + spec.treatment + "=" + format_double(t) +
                   "," + cset + "] − E[" + spec.outcome + "|" + spec.treatment + "=" +
                   format_double(t_ref) + "," + cset + "]]";
        }
        out += "\n  h0_" + label + ": psi_" + label + " = 0";
        out += "\n  h1_" + label + ": psi_" + label + " != 0";
    }
    return out;
}

} // namespace causal
