#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace mmcut {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

// Row-major 2D array. Pixel (x, y) has its center at continuous
// coordinate (x, y), x being the column index.
template <typename T>
class Grid {
  public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }

    T& at(int x, int y) {
        assert(in_bounds(x, y));
        return data_[static_cast<size_t>(y) * width_ + x];
    }
    const T& at(int x, int y) const {
        assert(in_bounds(x, y));
        return data_[static_cast<size_t>(y) * width_ + x];
    }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }
    bool same_size(int w, int h) const { return width_ == w && height_ == h; }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    bool operator==(const Grid& o) const {
        return width_ == o.width_ && height_ == o.height_ && data_ == o.data_;
    }

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Intensities in [0, 1].
using GrayImage = Grid<double>;
// Labels: 0 background, 1 foreground.
using BinaryMask = Grid<uint8_t>;
// Signed Euclidean distances, positive inside the shape.
using DistanceField = Grid<double>;

inline int foreground_count(const BinaryMask& m) {
    int n = 0;
    for (size_t i = 0; i < m.size(); ++i) n += m[i] ? 1 : 0;
    return n;
}

}  // namespace mmcut
