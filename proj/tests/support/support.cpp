#include "support.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace support {

causal::CausalGraph random_dag(causal::Rng& rng, int n_nodes, double edge_prob) {
    causal::CausalGraph g;
    std::vector<std::string> names;
    for (int i = 0; i < n_nodes; ++i) {
        names.push_back("V" + std::to_string(i));
        g.add_node(names.back());
    }
    // edges only from lower to higher index: acyclic by construction
    for (int i = 0; i < n_nodes; ++i)
        for (int j = i + 1; j < n_nodes; ++j)
            if (rng.uniform01() < edge_prob) g.add_directed(names[i], names[j]);
    return g;
}

causal::CausalGraph random_admg(causal::Rng& rng, int n_nodes, double edge_prob, double bi_prob) {
    causal::CausalGraph g = random_dag(rng, n_nodes, edge_prob);
    auto names = g.nodes();
    for (int i = 0; i < n_nodes; ++i)
        for (int j = i + 1; j < n_nodes; ++j)
            if (rng.uniform01() < bi_prob)
                g.add_bidirected(names[i], names[j], 0.1 + 0.9 * rng.uniform01());
    return g;
}

Eigen::MatrixXd LinGauss::sigma() const {
    const Eigen::Index n = b.rows();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - b.transpose();
    Eigen::MatrixXd ainv = a.inverse();
    return ainv * noise_var.asDiagonal() * ainv.transpose();
}

causal::ScmSpec LinGauss::to_scm() const {
    std::ostringstream text;
    for (size_t j = 0; j < names.size(); ++j) {
        text << names[j] << " = linear(";
        bool first = true;
        for (size_t i = 0; i < names.size(); ++i) {
            double w = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (w == 0.0) continue;
            if (!first) text << ", ";
            text << names[i] << ":" << w;
            first = false;
        }
        if (!first) text << ", ";
        text << "intercept:0) + gaussian(" << std::sqrt(noise_var[static_cast<Eigen::Index>(j)]) << ")\n";
    }
    return causal::parse_scm(text.str());
}

LinGauss random_lingauss(causal::Rng& rng, int n_nodes, double edge_prob) {
    LinGauss lg;
    lg.g = random_dag(rng, n_nodes, edge_prob);
    lg.names = lg.g.nodes();
    lg.b = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    lg.noise_var = Eigen::VectorXd::Ones(n_nodes);
    for (const auto& [from, to] : lg.g.directed_edges()) {
        double w = 0.6 + 0.9 * rng.uniform01();      // keep coefficients well away from 0
        if (rng.uniform01() < 0.5) w = -w;
        lg.b(lg.g.index_of(from), lg.g.index_of(to)) = w;
    }
    for (int i = 0; i < n_nodes; ++i) lg.noise_var[i] = 0.5 + rng.uniform01();
    return lg;
}

double oracle_partial_corr(const Eigen::MatrixXd& sigma, int x, int y, const std::vector<int>& z) {
    std::vector<int> idx = {x, y};
    idx.insert(idx.end(), z.begin(), z.end());
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = sigma(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    Eigen::MatrixXd omega = sub.inverse();
    return -omega(0, 1) / std::sqrt(omega(0, 0) * omega(1, 1));
}

namespace {

// canonical DAG as adjacency: dir[i] = children indices; names index space
struct Canon {
    std::vector<std::string> names;
    std::vector<std::vector<int>> children;
    std::vector<std::vector<int>> parents;

    int index(const std::string& n) const {
        auto it = std::find(names.begin(), names.end(), n);
        if (it == names.end()) throw std::runtime_error("oracle: unknown node " + n);
        return static_cast<int>(it - names.begin());
    }
};

Canon canonicalize(const causal::CausalGraph& g) {
    Canon c;
    c.names = g.nodes();
    for (const auto& e : g.bidirected())
        c.names.push_back("__u" + std::to_string(e.a) + "_" + std::to_string(e.b));
    c.children.resize(c.names.size());
    c.parents.resize(c.names.size());
    auto add = [&](int from, int to) {
        c.children[static_cast<size_t>(from)].push_back(to);
        c.parents[static_cast<size_t>(to)].push_back(from);
    };
    for (const auto& [from, to] : g.directed_edges()) add(c.index(from), c.index(to));
    int u = g.num_nodes();
    for (const auto& e : g.bidirected()) {
        add(u, e.a);
        add(u, e.b);
        ++u;
    }
    return c;
}

void collect_descendants(const Canon& c, int v, std::set<int>& out) {
    if (!out.insert(v).second) return;
    for (int ch : c.children[static_cast<size_t>(v)]) collect_descendants(c, ch, out);
}

// enumerate simple undirected paths from x to y; true when some path is open given z
bool any_open_path(const Canon& c, int x, int y, const std::set<int>& z) {
    struct Hop {
        int node;
        bool arrived_head; // edge into this node points at it
    };
    std::vector<Hop> stack;
    std::vector<char> on_path(c.names.size(), 0);
    bool open_found = false;

    auto blocked_interior = [&](const Hop& at, bool leave_head) {
        // leave_head: next edge's arrowhead is at `at` (i.e. we leave against an arrow)
        bool collider = at.arrived_head && leave_head;
        if (collider) {
            std::set<int> desc;
            collect_descendants(c, at.node, desc);
            for (int d : desc)
                if (z.count(d)) return false;
            return true;
        }
        return z.count(at.node) > 0;
    };

    std::function<void(Hop)> dfs = [&](Hop at) {
        if (open_found) return;
        if (at.node == y) {
            open_found = true;
            return;
        }
        on_path[static_cast<size_t>(at.node)] = 1;
        for (int ch : c.children[static_cast<size_t>(at.node)]) {
            if (on_path[static_cast<size_t>(ch)]) continue;
            if (at.node != x && blocked_interior(at, false)) continue;
            dfs({ch, true});
        }
        for (int pa : c.parents[static_cast<size_t>(at.node)]) {
            if (on_path[static_cast<size_t>(pa)]) continue;
            if (at.node != x && blocked_interior(at, true)) continue;
            dfs({pa, false});
        }
        on_path[static_cast<size_t>(at.node)] = 0;
    };
    dfs({x, false});
    return open_found;
}

} // namespace

bool oracle_d_separated(const causal::CausalGraph& g, const std::vector<std::string>& xs,
                        const std::vector<std::string>& ys, const std::vector<std::string>& zs) {
    Canon c = canonicalize(g);
    std::set<int> z;
    for (const auto& n : zs) z.insert(c.index(n));
    for (const auto& xn : xs)
        for (const auto& yn : ys) {
            int x = c.index(xn), y = c.index(yn);
            if (x == y) return false;
            if (any_open_path(c, x, y, z)) return false;
        }
    return true;
}

namespace {

causal::CausalGraph cut_outgoing_copy(const causal::CausalGraph& g, const std::string& t) {
    causal::CausalGraph h;
    for (const auto& n : g.nodes()) h.add_node(n);
    for (const auto& [from, to] : g.directed_edges())
        if (from != t) h.add_directed(from, to);
    for (const auto& e : g.bidirected())
        h.add_bidirected(g.nodes()[static_cast<size_t>(e.a)], g.nodes()[static_cast<size_t>(e.b)],
                         e.plausibility);
    return h;
}

std::set<std::string> oracle_descendants(const causal::CausalGraph& g, const std::string& v) {
    Canon c = canonicalize(g);
    std::set<int> desc;
    collect_descendants(c, c.index(v), desc);
    std::set<std::string> out;
    for (int d : desc)
        if (d < g.num_nodes()) out.insert(c.names[static_cast<size_t>(d)]);
    out.erase(v);
    return out;
}

} // namespace

bool oracle_backdoor_valid(const causal::CausalGraph& g, const std::string& t, const std::string& y,
                           const std::vector<std::string>& z) {
    std::set<std::string> desc = oracle_descendants(g, t);
    for (const auto& v : z)
        if (v == t || v == y || desc.count(v)) return false;
    causal::CausalGraph cut = cut_outgoing_copy(g, t);
    return oracle_d_separated(cut, {t}, {y}, z);
}

std::vector<std::vector<std::string>> oracle_min_backdoor_sets(const causal::CausalGraph& g,
                                                               const std::string& t,
                                                               const std::string& y) {
    std::set<std::string> desc = oracle_descendants(g, t);
    std::vector<std::string> pool;
    for (const auto& n : g.nodes())
        if (n != t && n != y && !desc.count(n)) pool.push_back(n);
    std::sort(pool.begin(), pool.end());

    std::vector<std::vector<std::string>> best;
    size_t best_size = pool.size() + 1;
    const size_t m = pool.size();
    for (size_t mask = 0; mask < (size_t{1} << m); ++mask) {
        std::vector<std::string> z;
        for (size_t i = 0; i < m; ++i)
            if (mask & (size_t{1} << i)) z.push_back(pool[i]);
        if (z.size() > best_size) continue;
        if (!oracle_backdoor_valid(g, t, y, z)) continue;
        if (z.size() < best_size) {
            best.clear();
            best_size = z.size();
        }
        best.push_back(z);
    }
    return best;
}

double oracle_fluctuation_eps(const Eigen::VectorXd& y, const Eigen::VectorXd& q0,
                              const Eigen::VectorXd& h) {
    auto loglik = [&](double eps) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            double q = std::min(1.0 - 1e-4, std::max(1e-4, q0[i]));
            double lin = std::log(q / (1.0 - q)) + eps * h[i];
            double p = 1.0 / (1.0 + std::exp(-lin));
            p = std::min(1.0 - 1e-12, std::max(1e-12, p));
            ll += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
        }
        return ll;
    };
    double lo = -50.0, hi = 50.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    double fa = loglik(a), fb = loglik(b);
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = loglik(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = loglik(a);
        }
    }
    return (lo + hi) / 2.0;
}

std::string cli_path() {
    const char* p = std::getenv("CAUSAL_CLI");
    if (!p || !*p) throw std::runtime_error("CAUSAL_CLI is not set");
    return p;
}

CliResult run_cli(const std::vector<std::string>& args) {
    std::string cmd = "'" + cli_path() + "'";
    for (const auto& a : args) cmd += " '" + a + "'";
    cmd += " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    std::string out;
    std::array<char, 4096> buf;
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    int status = pclose(pipe);
    int code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    return {code, out};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("causal_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
}

} // namespace support
