#include "mmcut/graphcut.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "mmcut/distance_transform.hpp"
#include "mmcut/errors.hpp"

namespace mmcut {

namespace {

// Arc id = node*8 + dir. Opposite direction is dir^1.
constexpr int kDirDx[8] = {1, -1, 0, 0, 1, -1, -1, 1};
constexpr int kDirDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

constexpr int kParentTerminal = -1;
constexpr int kParentNone = -2;

// Augmenting-path solver that keeps the source and sink search trees alive
// between augmentations, re-rooting orphaned subtrees instead of rebuilding.
class TreeSolver {
  public:
    explicit TreeSolver(const FlowNetwork& net)
        : w_(net.width()), h_(net.height()), n_((size_t)w_ * h_) {
        res_.assign(n_ * 8, 0.0);
        tr_cap_.assign(n_, 0.0);
        tree_.assign(n_, FREE);
        parent_.assign(n_, kParentNone);
        ts_.assign(n_, 0);
        dist_.assign(n_, 0);
        in_active_.assign(n_, 0);

        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const int v = y * w_ + x;
                const double src = net.cap_source(x, y);
                const double snk = net.cap_sink(x, y);
                tr_cap_[v] = src - snk;
                flow_ += std::min(src, snk);
                for (int k = 0; k < 4; ++k) {
                    const auto d = (NeighborDir)k;
                    if (!net.neighbor_in_bounds(x, y, d)) continue;
                    const double c = net.neighbor_cap(x, y, d);
                    const int ux = x + kNeighborOffsets[k][0];
                    const int uy = y + kNeighborOffsets[k][1];
                    const int u = uy * w_ + ux;
                    // Forward offset classes map onto dirs 0 (E), 2 (S),
                    // 4 (SE), 6 (SW); both directions carry the capacity.
                    const int dir = k * 2;
                    res_[(size_t)v * 8 + dir] = c;
                    res_[(size_t)u * 8 + (dir ^ 1)] = c;
                }
            }
        }
    }

    CutResult solve() {
        for (size_t v = 0; v < n_; ++v) {
            if (tr_cap_[v] > 0) {
                tree_[v] = SRC;
                parent_[v] = kParentTerminal;
                dist_[v] = 1;
                add_active((int)v);
            } else if (tr_cap_[v] < 0) {
                tree_[v] = SNK;
                parent_[v] = kParentTerminal;
                dist_[v] = 1;
                add_active((int)v);
            }
        }

        int v;
        while ((v = pop_active()) >= 0) {
            if (tree_[v] == FREE) continue;
            for (int d = 0; d < 8; ++d) {
                // Re-test the same arc after every augmentation: its residual
                // or the neighbor's tree may have changed.
                while (tree_[v] != FREE) {
                    const int u = neighbor(v, d);
                    if (u < 0) break;
                    const int arc_vu = v * 8 + d;
                    const int arc_uv = u * 8 + (d ^ 1);
                    const int fwd = tree_[v] == SRC ? arc_vu : arc_uv;
                    if (res_[fwd] <= 0) break;
                    if (tree_[u] == FREE) {
                        tree_[u] = tree_[v];
                        parent_[u] = fwd;
                        ts_[u] = ts_[v];
                        dist_[u] = dist_[v] + 1;
                        add_active(u);
                        break;
                    }
                    if (tree_[u] == tree_[v]) break;
                    // Arc joins the two trees: augment along it.
                    augment(tree_[v] == SRC ? arc_vu : arc_uv);
                    ++time_;
                    adopt_orphans();
                }
                if (tree_[v] == FREE) break;
            }
        }

        CutResult out;
        out.labeling = BinaryMask(w_, h_);
        for (size_t i = 0; i < n_; ++i) out.labeling[i] = tree_[i] == SRC ? 1 : 0;
        out.flow_value = flow_;
        return out;
    }

  private:
    enum Tree : uint8_t { FREE = 0, SRC = 1, SNK = 2 };

    int neighbor(int v, int d) const {
        const int x = v % w_ + kDirDx[d];
        const int y = v / w_ + kDirDy[d];
        if (x < 0 || x >= w_ || y < 0 || y >= h_) return -1;
        return y * w_ + x;
    }
    int rev_arc(int arc) const {
        const int d = arc & 7;
        return neighbor(arc >> 3, d) * 8 + (d ^ 1);
    }
    // Node on the terminal side of a tree arc: for source-tree nodes the
    // parent arc points parent->child, for sink-tree nodes child->parent.
    int parent_node(int v, int arc) const {
        return tree_[v] == SRC ? arc >> 3 : neighbor(arc >> 3, arc & 7);
    }

    void add_active(int v) {
        if (!in_active_[v]) {
            in_active_[v] = 1;
            active_.push_back(v);
        }
    }
    int pop_active() {
        while (!active_.empty()) {
            const int v = active_.front();
            active_.pop_front();
            in_active_[v] = 0;
            if (tree_[v] != FREE) return v;
        }
        return -1;
    }

    void make_orphan(int v) {
        parent_[v] = kParentNone;
        orphans_.push_back(v);
    }

    void augment(int connecting_arc) {
        const int p = connecting_arc >> 3;
        const int q = neighbor(p, connecting_arc & 7);

        double bn = res_[connecting_arc];
        for (int v = p; parent_[v] != kParentTerminal; v = parent_[v] >> 3)
            bn = std::min(bn, res_[parent_[v]]);
        {
            int root = p;
            while (parent_[root] != kParentTerminal) root = parent_[root] >> 3;
            bn = std::min(bn, tr_cap_[root]);
        }
        for (int v = q; parent_[v] != kParentTerminal;
             v = neighbor(parent_[v] >> 3, parent_[v] & 7))
            bn = std::min(bn, res_[parent_[v]]);
        {
            int root = q;
            while (parent_[root] != kParentTerminal)
                root = neighbor(parent_[root] >> 3, parent_[root] & 7);
            bn = std::min(bn, -tr_cap_[root]);
        }

        res_[connecting_arc] -= bn;
        res_[rev_arc(connecting_arc)] += bn;

        int v = p;
        while (parent_[v] != kParentTerminal) {
            const int pa = parent_[v];
            res_[pa] -= bn;
            res_[rev_arc(pa)] += bn;
            const int up = pa >> 3;
            if (res_[pa] <= 0) make_orphan(v);
            v = up;
        }
        tr_cap_[v] -= bn;
        if (tr_cap_[v] <= 0) make_orphan(v);

        v = q;
        while (parent_[v] != kParentTerminal) {
            const int pa = parent_[v];
            res_[pa] -= bn;
            res_[rev_arc(pa)] += bn;
            const int up = neighbor(pa >> 3, pa & 7);
            if (res_[pa] <= 0) make_orphan(v);
            v = up;
        }
        tr_cap_[v] += bn;
        if (tr_cap_[v] >= 0) make_orphan(v);

        flow_ += bn;
    }

    // Hops from u to its tree's terminal following currently valid parents;
    // -1 if the chain dead-ends. Stamps the walked path with the current
    // time so repeated checks in one adoption round are O(1).
    int origin_dist(int u) {
        int hops = 0;
        int v = u;
        int total;
        while (true) {
            if (ts_[v] == time_) {
                total = hops + dist_[v];
                break;
            }
            const int pa = parent_[v];
            if (pa == kParentTerminal) {
                total = hops + 1;
                break;
            }
            if (pa == kParentNone) return -1;
            v = parent_node(v, pa);
            ++hops;
        }
        v = u;
        int d = total;
        while (ts_[v] != time_) {
            ts_[v] = time_;
            dist_[v] = d;
            --d;
            const int pa = parent_[v];
            if (pa == kParentTerminal) break;
            v = parent_node(v, pa);
        }
        return total;
    }

    void adopt_orphans() {
        while (!orphans_.empty()) {
            const int v = orphans_.front();
            orphans_.pop_front();
            const Tree t = (Tree)tree_[v];

            int best_arc = kParentNone;
            int best_dist = INT32_MAX;
            for (int d = 0; d < 8; ++d) {
                const int u = neighbor(v, d);
                if (u < 0 || tree_[u] != t) continue;
                const int arc = t == SRC ? u * 8 + (d ^ 1) : v * 8 + d;
                if (res_[arc] <= 0) continue;
                const int od = origin_dist(u);
                if (od >= 0 && od < best_dist) {
                    best_dist = od;
                    best_arc = arc;
                }
            }
            if (best_arc != kParentNone) {
                parent_[v] = best_arc;
                ts_[v] = time_;
                dist_[v] = best_dist + 1;
                continue;
            }

            // No parent: free the node, orphan its children, and reactivate
            // neighbors that may now sit on the tree frontier.
            for (int d = 0; d < 8; ++d) {
                const int u = neighbor(v, d);
                if (u < 0 || tree_[u] != t) continue;
                const int frontier_arc = t == SRC ? u * 8 + (d ^ 1) : v * 8 + d;
                if (res_[frontier_arc] > 0) add_active(u);
                const int child_arc = t == SRC ? v * 8 + d : u * 8 + (d ^ 1);
                if (parent_[u] == child_arc) make_orphan(u);
            }
            tree_[v] = FREE;
        }
    }

    int w_, h_;
    size_t n_;
    std::vector<double> res_;
    std::vector<double> tr_cap_;
    std::vector<uint8_t> tree_;
    std::vector<int> parent_;
    std::vector<uint32_t> ts_;
    std::vector<int> dist_;
    std::vector<uint8_t> in_active_;
    std::deque<int> active_;
    std::deque<int> orphans_;
    double flow_ = 0.0;
    uint32_t time_ = 1;
};

}  // namespace

CutResult max_flow(const FlowNetwork& net) {
    TreeSolver solver(net);
    return solver.solve();
}

namespace {

// Plain shortest-augmenting-path solver on an explicit arc list.
struct ArcListGraph {
    struct Arc {
        int to;
        double cap;
        int rev;
    };
    std::vector<std::vector<Arc>> adj;

    explicit ArcListGraph(int nodes) : adj(nodes) {}

    void add_edge(int u, int v, double cap, double rev_cap) {
        adj[u].push_back({v, cap, (int)adj[v].size()});
        adj[v].push_back({u, rev_cap, (int)adj[u].size() - 1});
    }
};

}  // namespace

CutResult reference_max_flow(const FlowNetwork& net) {
    const int w = net.width();
    const int h = net.height();
    const int n = w * h;
    const int source = n;
    const int sink = n + 1;
    ArcListGraph g(n + 2);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int v = y * w + x;
            g.add_edge(source, v, net.cap_source(x, y), 0.0);
            g.add_edge(v, sink, net.cap_sink(x, y), 0.0);
        }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < 4; ++k) {
                const auto d = (NeighborDir)k;
                if (!net.neighbor_in_bounds(x, y, d)) continue;
                const double c = net.neighbor_cap(x, y, d);
                const int u = (y + kNeighborOffsets[k][1]) * w + (x + kNeighborOffsets[k][0]);
                g.add_edge(y * w + x, u, c, c);
            }

    double flow = 0.0;
    std::vector<int> prev_node(n + 2), prev_arc(n + 2);
    while (true) {
        std::fill(prev_node.begin(), prev_node.end(), -1);
        prev_node[source] = source;
        std::deque<int> queue{source};
        while (!queue.empty() && prev_node[sink] < 0) {
            const int v = queue.front();
            queue.pop_front();
            for (int i = 0; i < (int)g.adj[v].size(); ++i) {
                const auto& a = g.adj[v][i];
                if (a.cap > 0 && prev_node[a.to] < 0) {
                    prev_node[a.to] = v;
                    prev_arc[a.to] = i;
                    queue.push_back(a.to);
                }
            }
        }
        if (prev_node[sink] < 0) break;
        double bn = std::numeric_limits<double>::infinity();
        for (int v = sink; v != source; v = prev_node[v])
            bn = std::min(bn, g.adj[prev_node[v]][prev_arc[v]].cap);
        for (int v = sink; v != source; v = prev_node[v]) {
            auto& a = g.adj[prev_node[v]][prev_arc[v]];
            a.cap -= bn;
            g.adj[a.to][a.rev].cap += bn;
        }
        flow += bn;
    }

    // Residual reachability from the source = foreground.
    std::vector<uint8_t> reach(n + 2, 0);
    reach[source] = 1;
    std::deque<int> queue{source};
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (const auto& a : g.adj[v])
            if (a.cap > 0 && !reach[a.to]) {
                reach[a.to] = 1;
                queue.push_back(a.to);
            }
    }

    CutResult out;
    out.labeling = BinaryMask(w, h);
    for (int i = 0; i < n; ++i) out.labeling[i] = reach[i];
    out.flow_value = flow;
    return out;
}

FlowNetwork build_network(const GrayImage& image, const LaplaceParams& theta,
                          const TemplateSet& set, const MMWeights& weights,
                          const ShapeEnergyParams& shape_params) {
    const int w = image.width();
    const int h = image.height();
    const size_t J = set.entries.size();
    FlowNetwork net(w, h);
    const double beta = set.beta;
    double offset = 0.0;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double intensity = image.at(x, y);
            double src = neg_log_likelihood(intensity, theta.mu_bg, theta.b_bg);
            double snk = neg_log_likelihood(intensity, theta.mu_fg, theta.b_fg);
            for (size_t j = 0; j < J; ++j) {
                const TemplateEntry& e = set.entries[j];
                const Vec2 sp =
                    e.current_transform.apply({(double)x, (double)y}) + e.centroid;
                const double phi = sample_field(e.field, sp);
                const double term =
                    0.5 * beta * weights.c[j] * pow_abs(phi, shape_params.lambda);
                if (phi > 0.0)
                    src += term;
                else
                    snk += term;
            }
            if (!std::isfinite(src) || !std::isfinite(snk))
                throw NonFiniteWeight("build_network: non-finite t-link at pixel (" +
                                      std::to_string(x) + ", " + std::to_string(y) + ")");
            const double m = std::min(src, snk);
            offset += m;
            net.set_terminal(x, y, src - m, snk - m);
        }
    }

    const double pair_dist[4] = {1.0, 1.0, std::numbers::sqrt2, std::numbers::sqrt2};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < 4; ++k) {
                const auto d = (NeighborDir)k;
                if (!net.neighbor_in_bounds(x, y, d)) continue;
                const Vec2 mid{x + kNeighborOffsets[k][0] * 0.5,
                               y + kNeighborOffsets[k][1] * 0.5};
                double sum = 0.0;
                for (size_t j = 0; j < J; ++j) {
                    const TemplateEntry& e = set.entries[j];
                    const double phi =
                        sample_field(e.field, e.current_transform.apply(mid) + e.centroid);
                    sum += weights.c[j] * pow_abs(phi, shape_params.lambda);
                }
                const double cap =
                    std::numbers::pi * beta / (16.0 * pair_dist[k]) * sum;
                if (!std::isfinite(cap))
                    throw NonFiniteWeight("build_network: non-finite n-link at pixel (" +
                                          std::to_string(x) + ", " + std::to_string(y) + ")");
                net.set_neighbor(x, y, d, cap);
            }
        }
    }
    net.set_energy_offset(offset);
    return net;
}

bool check_submodularity(const FlowNetwork& net) {
    for (int y = 0; y < net.height(); ++y)
        for (int x = 0; x < net.width(); ++x)
            for (int k = 0; k < 4; ++k) {
                const auto d = (NeighborDir)k;
                if (!net.neighbor_in_bounds(x, y, d)) continue;
                if (net.neighbor_cap(x, y, d) < 0.0) return false;
            }
    return true;
}

double labeling_cut_cost(const FlowNetwork& net, const BinaryMask& labeling) {
    double cost = net.energy_offset();
    for (int y = 0; y < net.height(); ++y) {
        for (int x = 0; x < net.width(); ++x) {
            if (labeling.at(x, y))
                cost += net.cap_sink(x, y);
            else
                cost += net.cap_source(x, y);
            for (int k = 0; k < 4; ++k) {
                const auto d = (NeighborDir)k;
                if (!net.neighbor_in_bounds(x, y, d)) continue;
                const int ux = x + kNeighborOffsets[k][0];
                const int uy = y + kNeighborOffsets[k][1];
                if (labeling.at(x, y) != labeling.at(ux, uy))
                    cost += net.neighbor_cap(x, y, d);
            }
        }
    }
    return cost;
}

void dump_dimacs(const FlowNetwork& net, std::ostream& out) {
    const int w = net.width();
    const int h = net.height();
    const int n = w * h;
    size_t arcs = 2 * (size_t)n;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < 4; ++k)
                if (net.neighbor_in_bounds(x, y, (NeighborDir)k)) arcs += 2;

    // Node 1 = source, node 2 = sink, pixel i (row-major) = i + 3.
    out << "p max " << n + 2 << " " << arcs << "\n";
    out << "n 1 s\nn 2 t\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int v = y * w + x + 3;
            out << "a 1 " << v << " " << fmt(net.cap_source(x, y)) << "\n";
            out << "a " << v << " 2 " << fmt(net.cap_sink(x, y)) << "\n";
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < 4; ++k) {
                const auto d = (NeighborDir)k;
                if (!net.neighbor_in_bounds(x, y, d)) continue;
                const int a = y * w + x + 3;
                const int b = (y + kNeighborOffsets[k][1]) * w + (x + kNeighborOffsets[k][0]) + 3;
                const std::string cap = fmt(net.neighbor_cap(x, y, d));
                out << "a " << a << " " << b << " " << cap << "\n";
                out << "a " << b << " " << a << " " << cap << "\n";
            }
}

}  // namespace mmcut
