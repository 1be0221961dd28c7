#pragma once

#include <array>
#include <iosfwd>

#include "mmcut/grid.hpp"
#include "mmcut/intensity_model.hpp"
#include "mmcut/shape_prior.hpp"

namespace mmcut {

// Forward offsets enumerating each unordered 8-neighbor pair exactly once.
enum class NeighborDir { East = 0, South = 1, SouthEast = 2, SouthWest = 3 };
inline constexpr int kNeighborOffsets[4][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};

// Two-terminal grid flow network. T-links carry per-pixel source/sink
// capacities; n-links are symmetric per unordered pair, stored once under
// the forward offset of the lexicographically first endpoint.
class FlowNetwork {
  public:
    FlowNetwork() = default;
    FlowNetwork(int width, int height)
        : width_(width), height_(height) {
        const size_t n = (size_t)width * height;
        cap_src_.assign(n, 0.0);
        cap_snk_.assign(n, 0.0);
        for (auto& v : nlink_) v.assign(n, 0.0);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t node_count() const { return cap_src_.size(); }

    void set_terminal(int x, int y, double cap_source, double cap_sink) {
        cap_src_[idx(x, y)] = cap_source;
        cap_snk_[idx(x, y)] = cap_sink;
    }
    double cap_source(int x, int y) const { return cap_src_[idx(x, y)]; }
    double cap_sink(int x, int y) const { return cap_snk_[idx(x, y)]; }

    bool neighbor_in_bounds(int x, int y, NeighborDir d) const {
        const auto& o = kNeighborOffsets[(int)d];
        return x + o[0] >= 0 && x + o[0] < width_ && y + o[1] >= 0 && y + o[1] < height_;
    }
    void set_neighbor(int x, int y, NeighborDir d, double cap) {
        nlink_[(int)d][idx(x, y)] = cap;
    }
    double neighbor_cap(int x, int y, NeighborDir d) const {
        return nlink_[(int)d][idx(x, y)];
    }

    double energy_offset() const { return energy_offset_; }
    void set_energy_offset(double v) { energy_offset_ = v; }

  private:
    size_t idx(int x, int y) const { return (size_t)y * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> cap_src_, cap_snk_;
    std::array<std::vector<double>, 4> nlink_;
    double energy_offset_ = 0.0;
};

struct CutResult {
    BinaryMask labeling;  // 1 = source side (foreground)
    double flow_value = 0.0;
};

// Surrogate energy as a flow network. Source t-link = background likelihood
// cost plus (beta/2) sum_j c_j chi_j(T_j(s)) |phi_j(T_j(s))|^lambda; sink
// t-link mirrors it with (1 - chi_j); n-links carry
// (pi*beta / (16*||s-u||)) sum_j c_j |phi_j|^lambda at the pair midpoint.
// The per-pixel min(source, sink) is subtracted from both t-links and
// accumulated into the energy offset. Throws NonFiniteWeight on NaN/inf.
FlowNetwork build_network(const GrayImage& image, const LaplaceParams& theta,
                          const TemplateSet& set, const MMWeights& weights,
                          const ShapeEnergyParams& shape_params);

// Augmenting-path max-flow with reused search trees. Deterministic: fixed
// pixel and arc order; nodes unreachable from the source in the residual
// graph, including zero-capacity ties, label as background.
CutResult max_flow(const FlowNetwork& net);

// Independent shortest-augmenting-path solver kept as a second opinion for
// tests. Same labeling convention.
CutResult reference_max_flow(const FlowNetwork& net);

// True iff every n-link capacity is >= 0 (pairwise costs cut-nonnegative).
bool check_submodularity(const FlowNetwork& net);

// Cost of the cut induced by a labeling, including the energy offset.
double labeling_cut_cost(const FlowNetwork& net, const BinaryMask& labeling);

// DIMACS max-flow text dump (real-valued capacities) for external checking.
void dump_dimacs(const FlowNetwork& net, std::ostream& out);

}  // namespace mmcut
