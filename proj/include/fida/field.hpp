#pragma once

#include <cstddef>
#include <vector>

namespace fida {

// Uniform 1-d grid. Cell centers are x_i = x0 + i*dx; a periodic grid
// identifies x0 + n*dx with x0 (domain length n*dx).
struct Grid1D {
    double x0 = 0.0;
    double dx = 1.0;
    int n = 2;
    bool periodic = true;

    double center(int i) const { return x0 + i * dx; }
    double length() const { return n * dx; }
    void validate() const;

    bool operator==(const Grid1D&) const = default;
};

struct Field1D {
    Grid1D grid;
    std::vector<double> values;

    static Field1D zeros(const Grid1D& g) { return {g, std::vector<double>(static_cast<std::size_t>(g.n), 0.0)}; }
    void validate() const;
};

// Row-major storage: values[iy * nx + ix].
struct Field2D {
    Grid1D gridx;
    Grid1D gridy;
    std::vector<double> values;

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * gridx.n + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * gridx.n + ix]; }
    static Field2D zeros(const Grid1D& gx, const Grid1D& gy) {
        return {gx, gy, std::vector<double>(static_cast<std::size_t>(gx.n) * gy.n, 0.0)};
    }
    void validate() const;
};

double min_value(const std::vector<double>& v);
double max_value(const std::vector<double>& v);

}  // namespace fida
