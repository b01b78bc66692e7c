#include "causal/scm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "causal/stats.hpp"
#include "causal/util.hpp"

namespace causal {

namespace {

constexpr double kTableProbTol = 1e-9;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool integer_value(double v) { return std::isfinite(v) && std::floor(v) == v; }

void check_value_fits(const ColumnType& t, double v, const std::string& who) {
    if (!std::isfinite(v)) throw std::invalid_argument(who + ": non-finite value");
    if (t.discrete() && (!integer_value(v) || v < 0.0 || v >= t.levels))
        throw std::invalid_argument(who + ": value " + format_double(v) + " outside levels 0.." +
                                    std::to_string(t.levels - 1));
}

} // namespace

const ScmNode& ScmSpec::node(const std::string& name) const {
    for (const auto& n : nodes)
        if (n.name == name) return n;
    throw std::invalid_argument("scm: unknown node '" + name + "'");
}

bool ScmSpec::has_node(const std::string& name) const {
    for (const auto& n : nodes)
        if (n.name == name) return true;
    return false;
}

ColumnType scm_column_type(const ScmNode& node) {
    switch (node.mech.kind) {
        case MechanismKind::Linear:
        case MechanismKind::Polynomial: return {ColumnKind::Continuous, 0};
        case MechanismKind::Logistic: return {ColumnKind::Binary, 2};
        case MechanismKind::Threshold: return {ColumnKind::Ordinal, static_cast<int>(node.mech.cutpoints.size()) + 1};
        case MechanismKind::Table: {
            int k = static_cast<int>(node.mech.table.begin()->second.size());
            return k == 2 ? ColumnType{ColumnKind::Binary, 2} : ColumnType{ColumnKind::Categorical, k};
        }
        case MechanismKind::Constant: return node.forced_type;
    }
    throw std::logic_error("scm_column_type: unreachable");
}

CausalGraph scm_graph(const ScmSpec& scm) {
    CausalGraph g;
    for (const auto& n : scm.nodes) g.add_node(n.name);
    for (const auto& n : scm.nodes)
        for (const auto& p : n.parents) g.add_directed(p, n.name);
    return g;
}

void validate_scm(const ScmSpec& scm) {
    std::set<std::string> names;
    for (const auto& n : scm.nodes)
        if (!names.insert(n.name).second) throw std::invalid_argument("scm: duplicate node '" + n.name + "'");

    for (const auto& n : scm.nodes) {
        std::set<std::string> pset;
        for (const auto& p : n.parents) {
            if (!names.count(p)) throw std::invalid_argument("scm node '" + n.name + "': unknown parent '" + p + "'");
            if (!pset.insert(p).second)
                throw std::invalid_argument("scm node '" + n.name + "': duplicate parent '" + p + "'");
        }

        auto needs_no_noise = [&](const char* what) {
            if (n.noise.kind != NoiseSpec::None)
                throw std::invalid_argument("scm node '" + n.name + "': " + std::string(what) +
                                            " draws its own randomness, noise must be none");
        };
        if (n.noise.kind == NoiseSpec::Gaussian && !(n.noise.a > 0.0))
            throw std::invalid_argument("scm node '" + n.name + "': gaussian sd must be positive");
        if (n.noise.kind == NoiseSpec::Uniform && !(n.noise.a < n.noise.b))
            throw std::invalid_argument("scm node '" + n.name + "': uniform bounds must satisfy a < b");

        auto check_coef_parents = [&](const std::vector<std::pair<std::string, double>>& coefs) {
            std::set<std::string> used;
            for (const auto& [p, c] : coefs) {
                (void)c;
                if (!pset.count(p))
                    throw std::invalid_argument("scm node '" + n.name + "': coefficient on non-parent '" + p + "'");
                if (!used.insert(p).second)
                    throw std::invalid_argument("scm node '" + n.name + "': duplicate coefficient on '" + p + "'");
            }
            if (used.size() != pset.size())
                throw std::invalid_argument("scm node '" + n.name + "': every parent needs a coefficient");
        };

        switch (n.mech.kind) {
            case MechanismKind::Linear:
            case MechanismKind::Logistic:
                check_coef_parents(n.mech.coefficients);
                if (n.mech.kind == MechanismKind::Logistic) needs_no_noise("logistic");
                break;
            case MechanismKind::Threshold:
                check_coef_parents(n.mech.coefficients);
                if (n.mech.cutpoints.empty())
                    throw std::invalid_argument("scm node '" + n.name + "': threshold needs at least one cutpoint");
                for (std::size_t i = 1; i < n.mech.cutpoints.size(); ++i)
                    if (!(n.mech.cutpoints[i - 1] < n.mech.cutpoints[i]))
                        throw std::invalid_argument("scm node '" + n.name + "': cutpoints must be strictly increasing");
                break;
            case MechanismKind::Polynomial: {
                std::set<std::string> used;
                for (const auto& t : n.mech.terms) {
                    if (!pset.count(t.parent))
                        throw std::invalid_argument("scm node '" + n.name + "': term on non-parent '" + t.parent + "'");
                    if (t.power < 1)
                        throw std::invalid_argument("scm node '" + n.name + "': term power must be >= 1");
                    used.insert(t.parent);
                }
                if (used.size() != pset.size())
                    throw std::invalid_argument("scm node '" + n.name + "': every parent needs a term");
                break;
            }
            case MechanismKind::Table: {
                needs_no_noise("table");
                if (n.mech.table.empty())
                    throw std::invalid_argument("scm node '" + n.name + "': table has no rows");
                std::size_t k = n.mech.table.begin()->second.size();
                if (k < 2) throw std::invalid_argument("scm node '" + n.name + "': table needs >= 2 levels");
                for (const auto& [combo, probs] : n.mech.table) {
                    if (combo.size() != n.parents.size())
                        throw std::invalid_argument("scm node '" + n.name + "': table combo arity mismatch");
                    if (probs.size() != k)
                        throw std::invalid_argument("scm node '" + n.name + "': ragged table rows");
                    double sum = 0.0;
                    for (double p : probs) {
                        if (p < 0.0) throw std::invalid_argument("scm node '" + n.name + "': negative probability");
                        sum += p;
                    }
                    if (std::fabs(sum - 1.0) > kTableProbTol)
                        throw std::invalid_argument("scm node '" + n.name + "': table row must sum to 1");
                }
                break;
            }
            case MechanismKind::Constant:
                if (!n.parents.empty())
                    throw std::invalid_argument("scm node '" + n.name + "': constant nodes cannot have parents");
                needs_no_noise("constant");
                check_value_fits(n.forced_type, n.mech.constant, "scm node '" + n.name + "'");
                break;
        }
    }

    CycleCheck check = is_acyclic(scm_graph(scm));
    if (!check.acyclic) {
        std::string cyc;
        for (const auto& s : check.cycle) cyc += (cyc.empty() ? "" : " -> ") + s;
        throw std::invalid_argument("scm: cyclic structural equations: " + cyc);
    }

    // table parents must be discrete and their combos complete
    for (const auto& n : scm.nodes) {
        if (n.mech.kind != MechanismKind::Table) continue;
        std::size_t expected = 1;
        for (const auto& p : n.parents) {
            ColumnType pt = scm_column_type(scm.node(p));
            if (!pt.discrete())
                throw std::invalid_argument("scm node '" + n.name + "': table parent '" + p + "' is continuous");
            expected *= static_cast<std::size_t>(pt.levels);
        }
        if (n.mech.table.size() != expected)
            throw std::invalid_argument("scm node '" + n.name + "': table must cover every parent combination");
        for (const auto& [combo, probs] : n.mech.table) {
            (void)probs;
            for (std::size_t i = 0; i < combo.size(); ++i) {
                int levels = scm_column_type(scm.node(n.parents[i])).levels;
                if (combo[i] < 0 || combo[i] >= levels)
                    throw std::invalid_argument("scm node '" + n.name + "': table combo outside parent levels");
            }
        }
    }
}

Dataset sample_scm(const ScmSpec& scm, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_scm: n must be >= 1");
    validate_scm(scm);

    const std::size_t j_count = scm.nodes.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < j_count; ++j) index[scm.nodes[j].name] = j;

    // evaluation order from the DAG; streams stay tied to spec position
    std::vector<std::size_t> topo;
    {
        CausalGraph g = scm_graph(scm);
        for (const auto& f : markov_factorization(g)) topo.push_back(index.at(f.child));
    }

    Dataset ds;
    ds.names.reserve(j_count);
    ds.types.reserve(j_count);
    for (const auto& node : scm.nodes) {
        ds.names.push_back(node.name);
        ds.types.push_back(scm_column_type(node));
    }
    ds.values.resize(n, static_cast<Eigen::Index>(j_count));
    ds.observed = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Ones(n, static_cast<Eigen::Index>(j_count));

    for (std::size_t j : topo) {
        const ScmNode& node = scm.nodes[j];
        Rng rng(mix_seed(seed, j));
        std::vector<Eigen::Index> pidx;
        pidx.reserve(node.parents.size());
        for (const auto& p : node.parents) pidx.push_back(static_cast<Eigen::Index>(index.at(p)));

        for (Eigen::Index i = 0; i < n; ++i) {
            double noise = 0.0;
            switch (node.noise.kind) {
                case NoiseSpec::Gaussian: noise = rng.normal(0.0, node.noise.a); break;
                case NoiseSpec::Uniform: noise = rng.uniform(node.noise.a, node.noise.b); break;
                case NoiseSpec::None: break;
            }
            double v = 0.0;
            switch (node.mech.kind) {
                case MechanismKind::Linear: {
                    v = node.mech.intercept + noise;
                    for (std::size_t c = 0; c < node.mech.coefficients.size(); ++c)
                        v += node.mech.coefficients[c].second *
                             ds.values(i, static_cast<Eigen::Index>(index.at(node.mech.coefficients[c].first)));
                    break;
                }
                case MechanismKind::Polynomial: {
                    v = node.mech.intercept + noise;
                    for (const auto& t : node.mech.terms)
                        v += t.coef * std::pow(ds.values(i, static_cast<Eigen::Index>(index.at(t.parent))), t.power);
                    break;
                }
                case MechanismKind::Logistic: {
                    double lin = node.mech.intercept;
                    for (const auto& [p, c] : node.mech.coefficients)
                        lin += c * ds.values(i, static_cast<Eigen::Index>(index.at(p)));
                    v = rng.uniform01() < sigmoid(lin) ? 1.0 : 0.0;
                    break;
                }
                case MechanismKind::Threshold: {
                    double u = node.mech.intercept + noise;
                    for (const auto& [p, c] : node.mech.coefficients)
                        u += c * ds.values(i, static_cast<Eigen::Index>(index.at(p)));
                    int level = 0;
                    for (double cut : node.mech.cutpoints)
                        if (u > cut) ++level;
                    v = level;
                    break;
                }
                case MechanismKind::Table: {
                    std::vector<int> combo;
                    combo.reserve(pidx.size());
                    for (Eigen::Index p : pidx) combo.push_back(static_cast<int>(ds.values(i, p)));
                    auto it = node.mech.table.find(combo);
                    if (it == node.mech.table.end())
                        throw std::logic_error("sample_scm: missing table row for node '" + node.name + "'");
                    v = rng.categorical(it->second);
                    break;
                }
                case MechanismKind::Constant: v = node.mech.constant; break;
            }
            ds.values(i, static_cast<Eigen::Index>(j)) = v;
        }
    }
    ds.validate();
    return ds;
}

ScmSpec intervene(const ScmSpec& scm, const std::map<std::string, double>& assignments) {
    validate_scm(scm);
    ScmSpec out = scm;
    for (const auto& [name, value] : assignments) {
        bool found = false;
        for (auto& node : out.nodes) {
            if (node.name != name) continue;
            ColumnType t = scm_column_type(node);
            check_value_fits(t, value, "intervene on '" + name + "'");
            node.parents.clear();
            node.mech = Mechanism{};
            node.mech.kind = MechanismKind::Constant;
            node.mech.constant = value;
            node.noise = NoiseSpec{};
            node.forced_type = t;
            found = true;
            break;
        }
        if (!found) throw std::invalid_argument("intervene: unknown node '" + name + "'");
    }
    return out;
}

TrueEffect true_effect(const ScmSpec& scm, const std::string& treatment, double t, double t_ref,
                       const std::string& outcome, Eigen::Index n_mc, std::uint64_t seed) {
    if (n_mc < 1) throw std::invalid_argument("true_effect: n_mc must be >= 1");
    if (!scm.has_node(outcome)) throw std::invalid_argument("true_effect: unknown outcome '" + outcome + "'");
    if (treatment == outcome) throw std::invalid_argument("true_effect: treatment equals outcome");

    Dataset arm_t = sample_scm(intervene(scm, {{treatment, t}}), n_mc, seed);
    Dataset arm_r = sample_scm(intervene(scm, {{treatment, t_ref}}), n_mc, seed);
    Eigen::VectorXd diff = arm_t.column(outcome) - arm_r.column(outcome);
    double eff = diff.mean();
    double se = 0.0;
    if (n_mc > 1) {
        double ss = (diff.array() - eff).square().sum() / static_cast<double>(n_mc - 1);
        se = std::sqrt(ss / static_cast<double>(n_mc));
    }
    return {eff, se};
}

namespace {

// splits "mech(args) + noise(args)" at top-level '+'
std::vector<std::string> split_top_level(const std::string& s, char sep) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

struct Call {
    std::string name;
    std::vector<std::string> args;
};

Call parse_call(const std::string& text, const std::string& context) {
    std::string s = trim(text);
    auto open = s.find('(');
    if (open == std::string::npos) {
        if (!s.empty() && s.find(')') == std::string::npos) return {s, {}}; // bare word, e.g. "none"
        throw std::runtime_error(context + ": malformed call '" + s + "'");
    }
    if (s.back() != ')') throw std::runtime_error(context + ": malformed call '" + s + "'");
    Call call;
    call.name = trim(s.substr(0, open));
    std::string inner = s.substr(open + 1, s.size() - open - 2);
    if (!trim(inner).empty())
        for (const auto& a : split_top_level(inner, ',')) call.args.push_back(trim(a));
    return call;
}

std::vector<int> parse_combo(const std::string& key, const std::string& context) {
    // row keys look like r, r0, r1_2
    if (key.empty() || key[0] != 'r') throw std::runtime_error(context + ": table row key must start with 'r'");
    std::vector<int> combo;
    if (key.size() == 1) return combo;
    for (const auto& part : split(key.substr(1), '_'))
        combo.push_back(static_cast<int>(parse_long(part, context + ": table combo")));
    return combo;
}

} // namespace

ScmSpec parse_scm(const std::string& text) {
    ScmSpec scm;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = strip_comment(raw);
        if (line.empty()) continue;
        const std::string context = "scm line " + std::to_string(lineno);

        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(context + ": expected 'NAME = mechanism'");
        ScmNode node;
        node.name = trim(line.substr(0, eq));
        if (!valid_node_name(node.name)) throw std::runtime_error(context + ": invalid node name '" + node.name + "'");

        auto parts = split_top_level(line.substr(eq + 1), '+');
        if (parts.empty() || parts.size() > 2) throw std::runtime_error(context + ": expected 'mech' or 'mech + noise'");
        Call mech = parse_call(parts[0], context);

        auto parse_kv = [&](const std::string& arg) {
            auto colon = arg.rfind(':');
            if (colon == std::string::npos) throw std::runtime_error(context + ": expected 'key:value' in '" + arg + "'");
            return std::make_pair(trim(arg.substr(0, colon)), trim(arg.substr(colon + 1)));
        };

        auto read_linear_args = [&](bool allow_cuts) {
            for (const auto& arg : mech.args) {
                auto [key, val] = parse_kv(arg);
                if (key == "intercept") {
                    node.mech.intercept = parse_double(val, context);
                } else if (allow_cuts && key == "cut") {
                    node.mech.cutpoints.push_back(parse_double(val, context));
                } else {
                    node.mech.coefficients.emplace_back(key, parse_double(val, context));
                    node.parents.push_back(key);
                }
            }
        };

        if (mech.name == "linear") {
            node.mech.kind = MechanismKind::Linear;
            read_linear_args(false);
        } else if (mech.name == "logistic") {
            node.mech.kind = MechanismKind::Logistic;
            read_linear_args(false);
        } else if (mech.name == "threshold") {
            node.mech.kind = MechanismKind::Threshold;
            read_linear_args(true);
        } else if (mech.name == "polynomial") {
            node.mech.kind = MechanismKind::Polynomial;
            std::set<std::string> parent_set;
            for (const auto& arg : mech.args) {
                auto [key, val] = parse_kv(arg);
                if (key == "intercept") {
                    node.mech.intercept = parse_double(val, context);
                    continue;
                }
                PolyTerm term{key, 1, parse_double(val, context)};
                auto caret = key.find('^');
                if (caret != std::string::npos) {
                    term.parent = trim(key.substr(0, caret));
                    term.power = static_cast<int>(parse_long(key.substr(caret + 1), context + ": power"));
                }
                node.mech.terms.push_back(term);
                if (parent_set.insert(term.parent).second) node.parents.push_back(term.parent);
            }
        } else if (mech.name == "table") {
            node.mech.kind = MechanismKind::Table;
            for (const auto& arg : mech.args) {
                auto colon = arg.find(':');
                if (colon == std::string::npos) {
                    node.parents.push_back(trim(arg)); // bare token = parent name
                    continue;
                }
                std::string key = trim(arg.substr(0, colon));
                std::vector<double> probs;
                for (const auto& p : split(arg.substr(colon + 1), '/')) probs.push_back(parse_double(p, context));
                node.mech.table[parse_combo(key, context)] = probs;
            }
        } else {
            throw std::runtime_error(context + ": unknown mechanism '" + mech.name + "'");
        }

        if (parts.size() == 2) {
            Call noise = parse_call(parts[1], context);
            if (noise.name == "gaussian") {
                if (noise.args.size() != 1) throw std::runtime_error(context + ": gaussian takes one argument");
                node.noise = {NoiseSpec::Gaussian, parse_double(noise.args[0], context), 0.0};
            } else if (noise.name == "uniform") {
                if (noise.args.size() != 2) throw std::runtime_error(context + ": uniform takes two arguments");
                node.noise = {NoiseSpec::Uniform, parse_double(noise.args[0], context),
                              parse_double(noise.args[1], context)};
            } else if (noise.name == "none") {
                node.noise = {NoiseSpec::None, 0.0, 0.0};
            } else {
                throw std::runtime_error(context + ": unknown noise '" + noise.name + "'");
            }
        }
        scm.nodes.push_back(node);
    }
    validate_scm(scm);
    return scm;
}

ScmSpec load_scm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scm file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scm(ss.str());
}

} // namespace causal
