#pragma once

// Rooted trees with admissible numbering (root 1, parent(v) < v), their
// incidence and path matrices, active sets of jump edges and path
// decompositions used by the compatibility bounds.
//
// Vertices are labelled 1..n. Edge e_v joins parent(v) and v, so edges are
// labelled by their child vertex 2..n. Signals are Eigen vectors with f[v-1].

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tvtree/error.hpp"

namespace tvtree {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

class TreeGraph {
public:
    TreeGraph() = default;

    /// parents maps every label 2..n to its parent. n defaults to the
    /// largest label present (at least 1).
    static TreeGraph from_parents(const std::map<int, int>& parents,
                                  std::optional<int> n = std::nullopt) {
        int nn = n.value_or(1);
        if (!n) {
            for (const auto& [v, p] : parents) nn = std::max({nn, v, p});
        }
        if (nn < 1) throw Error(ErrorCode::BadLabels, "n must be at least 1");
        std::vector<int> par(static_cast<std::size_t>(nn) + 1, 0);
        for (const auto& [v, p] : parents) {
            if (v < 1 || v > nn || p < 1 || p > nn)
                throw Error(ErrorCode::BadLabels,
                            "label out of range 1.." + std::to_string(nn));
            if (v == 1) throw Error(ErrorCode::BadNumbering, "root 1 cannot have a parent");
            if (p >= v)
                throw Error(ErrorCode::BadNumbering,
                            "parent(" + std::to_string(v) + ") = " + std::to_string(p) +
                                " is not smaller than the child");
            par[v] = p;
        }
        for (int v = 2; v <= nn; ++v)
            if (par[v] == 0)
                throw Error(ErrorCode::BadLabels, "vertex " + std::to_string(v) + " has no parent");
        return TreeGraph(std::move(par));
    }

    /// parent_list[v] for v = 1..n (index 0 and 1 ignored).
    static TreeGraph from_parent_vector(const std::vector<int>& parent_list) {
        std::map<int, int> m;
        for (std::size_t v = 2; v < parent_list.size(); ++v) m[static_cast<int>(v)] = parent_list[v];
        return from_parents(m, static_cast<int>(parent_list.size()) - 1);
    }

    int n() const { return static_cast<int>(parent_.size()) - 1; }
    int edge_count() const { return n() - 1; }
    int parent(int v) const { return parent_[v]; }
    const std::vector<int>& children(int v) const { return children_[v]; }
    int depth(int v) const { return depth_[v]; }
    int subtree_size(int v) const { return tout_[v] - tin_[v]; }
    /// Preorder position; the subtree of v occupies [tin(v), tout(v)).
    int tin(int v) const { return tin_[v]; }
    int tout(int v) const { return tout_[v]; }
    const std::vector<int>& preorder() const { return order_; }
    bool in_subtree(int v, int top) const { return tin_[top] <= tin_[v] && tin_[v] < tout_[top]; }
    int degree(int v) const {
        return static_cast<int>(children_[v].size()) + (v == 1 ? 0 : 1);
    }
    bool is_path() const {
        for (int v = 1; v <= n(); ++v)
            if (parent_[v] != (v == 1 ? 0 : v - 1)) return false;
        return true;
    }
    std::vector<int> ramification_points() const {
        std::vector<int> r;
        for (int v = 1; v <= n(); ++v)
            if (degree(v) >= 3) r.push_back(v);
        return r;
    }
    std::map<int, int> parent_map() const {
        std::map<int, int> m;
        for (int v = 2; v <= n(); ++v) m[v] = parent_[v];
        return m;
    }

private:
    explicit TreeGraph(std::vector<int> par) : parent_(std::move(par)) {
        const int nn = n();
        children_.assign(nn + 1, {});
        depth_.assign(nn + 1, 0);
        for (int v = 2; v <= nn; ++v) {
            children_[parent_[v]].push_back(v);
            depth_[v] = depth_[parent_[v]] + 1;
        }
        tin_.assign(nn + 1, 0);
        tout_.assign(nn + 1, 0);
        order_.clear();
        order_.reserve(nn);
        std::vector<std::pair<int, std::size_t>> stack{{1, 0}};
        tin_[1] = 0;
        order_.push_back(1);
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < children_[v].size()) {
                int c = children_[v][next++];
                tin_[c] = static_cast<int>(order_.size());
                order_.push_back(c);
                stack.push_back({c, 0});
            } else {
                tout_[v] = static_cast<int>(order_.size());
                stack.pop_back();
            }
        }
    }

    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
    std::vector<int> depth_, tin_, tout_, order_;
};

inline TreeGraph build_tree(const std::map<int, int>& parents, std::optional<int> n = std::nullopt) {
    return TreeGraph::from_parents(parents, n);
}

inline TreeGraph path_graph(int n) {
    if (n < 1) throw Error(ErrorCode::BadParams, "path needs n >= 1");
    std::vector<int> p(n + 1, 0);
    for (int v = 2; v <= n; ++v) p[v] = v - 1;
    return TreeGraph::from_parent_vector(p);
}

/// Main branch 1..n1, side branch n1+1..n1+n2 hanging off vertex b.
inline TreeGraph branched_path(int n1, int n2, int b) {
    if (n1 < 2 || n2 < 1 || b < 1 || b >= n1)
        throw Error(ErrorCode::BadParams, "branched path needs n1 >= 2, n2 >= 1, 1 <= b < n1");
    std::vector<int> p(n1 + n2 + 1, 0);
    for (int v = 2; v <= n1; ++v) p[v] = v - 1;
    p[n1 + 1] = b;
    for (int v = n1 + 2; v <= n1 + n2; ++v) p[v] = v - 1;
    return TreeGraph::from_parent_vector(p);
}

/// Undirected edge list on labels 1..n. Requires the labelling to already be
/// admissible when rooted at 1; see renumber_bfs otherwise.
inline TreeGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n < 1) throw Error(ErrorCode::BadLabels, "n must be at least 1");
    if (static_cast<int>(edges.size()) != n - 1)
        throw Error(ErrorCode::NonTree, "a tree on n vertices has n - 1 edges");
    std::vector<std::vector<int>> adj(n + 1);
    for (auto [a, b] : edges) {
        if (a < 1 || a > n || b < 1 || b > n) throw Error(ErrorCode::BadLabels, "edge label out of range");
        if (a == b) throw Error(ErrorCode::NonTree, "self loop");
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<int> par(n + 1, -1);
    par[1] = 0;
    std::queue<int> q;
    q.push(1);
    int seen = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : adj[v]) {
            if (w == par[v]) continue;
            if (par[w] != -1) throw Error(ErrorCode::NonTree, "cycle detected");
            par[w] = v;
            ++seen;
            q.push(w);
        }
    }
    if (seen != n) throw Error(ErrorCode::NonTree, "graph is disconnected");
    std::map<int, int> m;
    for (int v = 2; v <= n; ++v) m[v] = par[v];
    return TreeGraph::from_parents(m, n);
}

/// Relabels an arbitrary tree in breadth-first order from `root`.
/// Returns the graph and old_to_new (index 0 unused).
inline std::pair<TreeGraph, std::vector<int>> renumber_bfs(
    int n, const std::vector<std::pair<int, int>>& edges, int root = 1) {
    if (static_cast<int>(edges.size()) != n - 1)
        throw Error(ErrorCode::NonTree, "a tree on n vertices has n - 1 edges");
    if (root < 1 || root > n) throw Error(ErrorCode::BadLabels, "root out of range");
    std::vector<std::vector<int>> adj(n + 1);
    for (auto [a, b] : edges) {
        if (a < 1 || a > n || b < 1 || b > n) throw Error(ErrorCode::BadLabels, "edge label out of range");
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    std::vector<int> old_to_new(n + 1, 0), new_parent(n + 1, 0);
    std::queue<int> q;
    q.push(root);
    old_to_new[root] = 1;
    int next = 2;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : adj[v]) {
            if (old_to_new[w] != 0) continue;
            old_to_new[w] = next;
            new_parent[next] = old_to_new[v];
            ++next;
            q.push(w);
        }
    }
    if (next != n + 1) throw Error(ErrorCode::NonTree, "graph is disconnected or has a cycle");
    return {TreeGraph::from_parent_vector(new_parent), old_to_new};
}

// ---------------------------------------------------------------------------
// Matrices

/// D: (n-1) x n, row v-2 has -1 at parent(v) and +1 at v.
inline IntMatrix incidence_matrix(const TreeGraph& g) {
    const int n = g.n();
    IntMatrix D = IntMatrix::Zero(n - 1, n);
    for (int v = 2; v <= n; ++v) {
        D(v - 2, g.parent(v) - 1) = -1;
        D(v - 2, v - 1) = 1;
    }
    return D;
}

/// D~ = [e_1^T; D], lower unit-triangular under admissible numbering.
inline IntMatrix rooted_incidence(const TreeGraph& g) {
    const int n = g.n();
    IntMatrix Dt = IntMatrix::Zero(n, n);
    Dt(0, 0) = 1;
    for (int v = 2; v <= n; ++v) {
        Dt(v - 1, g.parent(v) - 1) = -1;
        Dt(v - 1, v - 1) = 1;
    }
    return Dt;
}

/// X = D~^{-1}: X(i, j) = 1 iff j lies on the path from the root to i.
inline IntMatrix path_matrix(const TreeGraph& g) {
    const int n = g.n();
    IntMatrix X = IntMatrix::Zero(n, n);
    for (int i = 1; i <= n; ++i)
        for (int j = i; j != 0; j = g.parent(j)) X(i - 1, j - 1) = 1;
    return X;
}

inline std::string matrix_csv(const IntMatrix& M) {
    std::ostringstream os;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) os << ',';
            os << M(i, j);
        }
        os << '\n';
    }
    return os.str();
}

inline double total_variation(const TreeGraph& g, const Vector& f) {
    if (f.size() != g.n()) throw Error(ErrorCode::LengthMismatch, "signal length differs from n");
    double tv = 0.0;
    for (int v = 2; v <= g.n(); ++v) tv += std::abs(f[v - 1] - f[g.parent(v) - 1]);
    return tv;
}

/// D~ f, i.e. (f_1, f_v - f_parent(v) for v = 2..n).
inline Vector rooted_differences(const TreeGraph& g, const Vector& f) {
    if (f.size() != g.n()) throw Error(ErrorCode::LengthMismatch, "signal length differs from n");
    Vector b(g.n());
    b[0] = f[0];
    for (int v = 2; v <= g.n(); ++v) b[v - 1] = f[v - 1] - f[g.parent(v) - 1];
    return b;
}

/// X beta, accumulated from the root.
inline Vector signal_from_coefficients(const TreeGraph& g, const Vector& beta) {
    if (beta.size() != g.n()) throw Error(ErrorCode::LengthMismatch, "coefficient length differs from n");
    Vector f(g.n());
    f[0] = beta[0];
    for (int v = 2; v <= g.n(); ++v) f[v - 1] = f[g.parent(v) - 1] + beta[v - 1];
    return f;
}

// ---------------------------------------------------------------------------
// Active sets

/// Sorted set of jump edges, each labelled by its child vertex in 2..n.
struct ActiveSet {
    std::vector<int> vertices;

    ActiveSet() = default;
    ActiveSet(const TreeGraph& g, std::vector<int> v) : vertices(std::move(v)) {
        std::sort(vertices.begin(), vertices.end());
        if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end())
            throw Error(ErrorCode::InvalidActiveSet, "duplicate edge in active set");
        for (int x : vertices)
            if (x < 2 || x > g.n())
                throw Error(ErrorCode::InvalidActiveSet,
                            "edge " + std::to_string(x) + " outside 2.." + std::to_string(g.n()));
    }

    int size() const { return static_cast<int>(vertices.size()); }
    bool empty() const { return vertices.empty(); }
    bool contains(int v) const { return std::binary_search(vertices.begin(), vertices.end(), v); }
    /// Membership mask indexed by vertex 0..n.
    std::vector<char> mask(int n) const {
        std::vector<char> m(n + 1, 0);
        for (int v : vertices) m[v] = 1;
        return m;
    }
};

/// Edges where f jumps (|f_v - f_parent(v)| > tol).
inline ActiveSet jump_set(const TreeGraph& g, const Vector& f, double tol = 0.0) {
    std::vector<int> s;
    for (int v = 2; v <= g.n(); ++v)
        if (std::abs(f[v - 1] - f[g.parent(v) - 1]) > tol) s.push_back(v);
    return ActiveSet(g, s);
}

// ---------------------------------------------------------------------------
// Path decompositions

/// A path segment of the tree listed from its top vertex downwards. jumps
/// holds the active-set vertices inside it; gaps are d_1..d_{s+1} (vertex
/// counts between consecutive jumps) and splits u_2..u_s sit in the interior.
struct Segment {
    std::vector<int> vertices;
    std::vector<int> jumps;
    std::vector<int> gaps;
    std::vector<int> splits;

    int s() const { return static_cast<int>(jumps.size()); }
    int length() const { return static_cast<int>(vertices.size()); }
    bool first_ok() const { return s() == 0 || gaps.front() >= 2; }
    bool last_ok() const { return s() == 0 || gaps.back() >= 2; }
    bool interior_ok() const {
        for (int j = 1; j + 1 < static_cast<int>(gaps.size()); ++j)
            if (gaps[j] < 4) return false;
        return true;
    }
    bool valid() const { return first_ok() && interior_ok() && last_ok(); }
};

struct SegmentDecomposition {
    int n = 0;
    std::vector<Segment> segments;
    std::vector<int> cut_edges;  // child vertices of the removed edges

    int g() const { return static_cast<int>(segments.size()); }
    int s() const {
        int t = 0;
        for (const auto& seg : segments) t += seg.s();
        return t;
    }
    /// Gap conditions of the compatibility bounds on every segment with jumps.
    bool valid_for_bounds() const {
        for (const auto& seg : segments)
            if (!seg.valid()) return false;
        return true;
    }
    /// Every gap of every segment is at least 4.
    bool large_enough() const {
        for (const auto& seg : segments)
            for (int d : seg.gaps)
                if (d < 4) return false;
        return true;
    }
    bool sparse_enough() const { return 4 * s() <= n; }
    int min_gap() const {
        int m = n;
        for (const auto& seg : segments)
            if (seg.s() > 0)
                for (int d : seg.gaps) m = std::min(m, d);
        return m;
    }
};

namespace detail {

inline Segment make_segment(std::vector<int> verts, const std::vector<char>& in_s) {
    Segment seg;
    seg.vertices = std::move(verts);
    std::vector<int> pos;
    for (int k = 1; k < seg.length(); ++k)
        if (in_s[seg.vertices[k]]) {
            seg.jumps.push_back(seg.vertices[k]);
            pos.push_back(k);
        }
    if (pos.empty()) {
        seg.gaps = {seg.length()};
        return seg;
    }
    seg.gaps.push_back(pos.front());
    for (std::size_t j = 1; j < pos.size(); ++j) seg.gaps.push_back(pos[j] - pos[j - 1]);
    seg.gaps.push_back(seg.length() - pos.back());
    for (std::size_t j = 1; j + 1 < seg.gaps.size(); ++j) seg.splits.push_back(seg.gaps[j] / 2);
    return seg;
}

/// Splits the tree along cut edges. Returns nullopt if some component is not
/// a downward path.
inline std::optional<SegmentDecomposition> segments_from_cuts(const TreeGraph& g, const ActiveSet& S,
                                                              std::vector<int> cuts) {
    const int n = g.n();
    std::vector<char> cut(n + 1, 0);
    for (int c : cuts) cut[c] = 1;
    auto in_s = S.mask(n);
    SegmentDecomposition dec;
    dec.n = n;
    std::sort(cuts.begin(), cuts.end());
    dec.cut_edges = cuts;
    for (int top = 1; top <= n; ++top) {
        if (top != 1 && !cut[top]) continue;
        std::vector<int> verts{top};
        int v = top;
        while (true) {
            int next = 0, kept = 0;
            for (int c : g.children(v))
                if (!cut[c]) {
                    next = c;
                    ++kept;
                }
            if (kept > 1) return std::nullopt;
            if (kept == 0) break;
            v = next;
            verts.push_back(v);
        }
        dec.segments.push_back(make_segment(std::move(verts), in_s));
    }
    return dec;
}

}  // namespace detail

/// Splits the tree into paths by cutting, at every ramification point, all
/// incident edges but one. The default keeps the edge towards the parent;
/// the kept edge is moved to a child branch when that is needed to avoid
/// cutting an active edge or to meet the gap conditions. Explicit cut_edges
/// bypass the search.
inline SegmentDecomposition decompose(const TreeGraph& g, const ActiveSet& S,
                                      std::optional<std::vector<int>> cut_edges = std::nullopt) {
    const int n = g.n();
    if (cut_edges) {
        for (int c : *cut_edges) {
            if (c < 2 || c > n) throw Error(ErrorCode::InvalidDecomposition, "cut edge out of range");
            if (S.contains(c))
                throw Error(ErrorCode::InfeasibleDecomposition,
                            "cut edge " + std::to_string(c) + " is an active edge");
        }
        auto dec = detail::segments_from_cuts(g, S, *cut_edges);
        if (!dec) throw Error(ErrorCode::InvalidDecomposition, "cut edges leave a non-path component");
        return *dec;
    }

    // Candidate kept edge at each ramification point r: 0 = parent edge, or a
    // child vertex c meaning edge (r, c).
    std::vector<int> rams;
    for (int v = 1; v <= n; ++v)
        if (g.children(v).size() >= 2) rams.push_back(v);
    std::vector<std::vector<int>> options;
    for (int r : rams) {
        std::vector<int> o;
        if (r != 1) o.push_back(0);
        for (int c : g.children(r)) o.push_back(c);
        options.push_back(std::move(o));
    }

    auto cuts_for = [&](const std::vector<int>& choice) {
        std::vector<int> cuts;
        for (std::size_t k = 0; k < rams.size(); ++k) {
            int r = rams[k];
            int keep = options[k][choice[k]];
            if (keep != 0 && r != 1) cuts.push_back(r);
            for (int c : g.children(r))
                if (c != keep) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        return cuts;
    };
    // (feasible, valid, min gap, -segments); the first best candidate wins.
    using Score = std::tuple<int, int, int, int>;
    auto score = [&](const std::vector<int>& cuts, std::optional<SegmentDecomposition>& out) {
        for (int c : cuts)
            if (S.contains(c)) return Score{0, 0, 0, 0};
        out = detail::segments_from_cuts(g, S, cuts);
        if (!out) return Score{0, 0, 0, 0};
        return Score{1, out->valid_for_bounds() ? 1 : 0, out->min_gap(), -out->g()};
    };

    std::vector<int> choice(rams.size(), 0);
    std::optional<SegmentDecomposition> best;
    Score best_score{-1, 0, 0, 0};
    auto consider = [&](const std::vector<int>& ch) {
        std::optional<SegmentDecomposition> d;
        Score sc = score(cuts_for(ch), d);
        if (sc > best_score) {
            best_score = sc;
            best = d;
        }
        return sc;
    };

    double combos = 1.0;
    for (const auto& o : options) combos *= static_cast<double>(o.size());
    if (combos <= 4096.0) {
        // Mixed radix enumeration, default choice first.
        while (true) {
            consider(choice);
            std::size_t k = 0;
            while (k < choice.size()) {
                if (++choice[k] < static_cast<int>(options[k].size())) break;
                choice[k] = 0;
                ++k;
            }
            if (k == choice.size()) break;
        }
    } else {
        // Coordinate-wise improvement from the default.
        consider(choice);
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::size_t k = 0; k < choice.size(); ++k) {
                int keep = choice[k];
                for (int o = 0; o < static_cast<int>(options[k].size()); ++o) {
                    if (o == keep) continue;
                    auto trial = choice;
                    trial[k] = o;
                    Score before = best_score;
                    consider(trial);
                    if (best_score > before) {
                        choice = trial;
                        improved = true;
                    }
                }
            }
        }
    }
    if (!best || std::get<0>(best_score) == 0)
        throw Error(ErrorCode::InfeasibleDecomposition,
                    "every admissible cut placement removes an active edge");
    return *best;
}

// ---------------------------------------------------------------------------
// Local structure at a ramification point

/// Jump structure around a ramification point r with K outbound branches.
/// b[0] counts vertices from the last inbound jump vertex (or the root) down
/// to r, both included; b[l] counts vertices of outbound branch l before its
/// first jump. surrounding[l] is the jump vertex closing each region, 0 when
/// the region ends at the root (inbound) or at a leaf (outbound).
struct BranchingDescriptor {
    int vertex = 0;
    std::vector<int> b;
    std::vector<int> surrounding;
    bool local = true;  // no other ramification point inside the regions

    int K() const { return static_cast<int>(b.size()) - 1; }
    int b_star() const { return std::accumulate(b.begin(), b.end(), 0); }
};

inline BranchingDescriptor branching_descriptor(const TreeGraph& g, const ActiveSet& S, int r) {
    if (r < 1 || r > g.n() || g.children(r).size() < 2)
        throw Error(ErrorCode::BadParams, "vertex " + std::to_string(r) + " is not a ramification point");
    BranchingDescriptor bd;
    bd.vertex = r;
    int count = 1, v = r;
    while (!S.contains(v) && v != 1) {
        v = g.parent(v);
        ++count;
        if (g.children(v).size() != 1) bd.local = false;
    }
    bd.b.push_back(count);
    bd.surrounding.push_back(S.contains(v) ? v : 0);
    for (int c : g.children(r)) {
        int cnt = 0, w = c, jump = 0;
        while (true) {
            if (S.contains(w)) {
                jump = w;
                break;
            }
            ++cnt;
            const auto& ch = g.children(w);
            if (ch.empty()) break;
            if (ch.size() > 1) {
                bd.local = false;
                break;
            }
            w = ch.front();
        }
        bd.b.push_back(cnt);
        bd.surrounding.push_back(jump);
    }
    return bd;
}

enum class BranchCase { Case1, Case2, Case3a, Case3b, Case4 };

inline const char* branch_case_name(BranchCase c) {
    switch (c) {
        case BranchCase::Case1: return "1";
        case BranchCase::Case2: return "2";
        case BranchCase::Case3a: return "3a";
        case BranchCase::Case3b: return "3b";
        case BranchCase::Case4: return "4";
    }
    return "?";
}

/// Case label from (b_in, b_out1, b_out2) around a single ramification point.
inline BranchCase classify_branch_case(int b1, int b2, int b3) {
    if (b1 < 1 || b2 < 0 || b3 < 0)
        throw Error(ErrorCode::UnsupportedConfiguration, "jump directly before the ramification point");
    if (b2 == 0 && b3 == 0)
        throw Error(ErrorCode::UnsupportedConfiguration, "jumps on both outbound edges of the ramification point");
    if (b2 == 0 || b3 == 0) return BranchCase::Case2;
    int m = std::min(b2, b3);
    if (b1 == 1) {
        if (m == 2) return BranchCase::Case3a;
        if (m >= 3) return BranchCase::Case3b;
        return BranchCase::Case4;
    }
    if (m == 1) return BranchCase::Case4;
    return BranchCase::Case1;
}

inline BranchCase classify_branch_case(const BranchingDescriptor& bd) {
    if (bd.K() != 2) throw Error(ErrorCode::UnsupportedConfiguration, "case table needs exactly two outbound branches");
    return classify_branch_case(bd.b[0], bd.b[1], bd.b[2]);
}

/// Gap list of a branched path (main 1..n1, side n1+1..n hanging off b) in
/// the single-sequence form: segment 1..b, then b+1..n1, then n1+1..n.
/// Returned together with the indices of the three gaps touching b.
struct BranchedGaps {
    std::vector<int> gaps;
    int s1 = 0, s2 = 0, s3 = 0;
    int idx_in = 0, idx_out1 = 0, idx_out2 = 0;
    int b_star() const { return gaps[idx_in] + gaps[idx_out1] + gaps[idx_out2]; }
};

inline BranchedGaps branched_gaps(int n1, int n2, int b, const std::vector<int>& S) {
    const int n = n1 + n2;
    BranchedGaps out;
    // vertices lo..hi; a jump at lo itself gives a leading gap of 0
    auto run = [&](int lo, int hi) {
        std::vector<int> js;
        for (int x : S)
            if (x >= lo && x <= hi) js.push_back(x);
        std::sort(js.begin(), js.end());
        int prev = lo;
        std::vector<int> gaps;
        for (int x : js) {
            gaps.push_back(x - prev);
            prev = x;
        }
        gaps.push_back(hi - prev + 1);
        return std::make_pair(gaps, static_cast<int>(js.size()));
    };
    auto [g1, s1] = run(1, b);
    auto [g2, s2] = run(b + 1, n1);
    auto [g3, s3] = run(n1 + 1, n);
    out.s1 = s1;
    out.s2 = s2;
    out.s3 = s3;
    out.gaps = g1;
    out.idx_in = static_cast<int>(g1.size()) - 1;
    out.idx_out1 = static_cast<int>(out.gaps.size());
    out.gaps.insert(out.gaps.end(), g2.begin(), g2.end());
    out.idx_out2 = static_cast<int>(out.gaps.size());
    out.gaps.insert(out.gaps.end(), g3.begin(), g3.end());
    return out;
}

}  // namespace tvtree
