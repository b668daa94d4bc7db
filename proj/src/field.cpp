#include "fida/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fida/errors.hpp"

namespace fida {

void Grid1D::validate() const {
    if (!(dx > 0.0)) throw PreconditionError("grid spacing must be positive, got dx=" + std::to_string(dx));
    if (n < 2) throw PreconditionError("grid needs at least 2 cells, got n=" + std::to_string(n));
    if (!std::isfinite(x0) || !std::isfinite(dx)) throw DomainError("grid origin/spacing must be finite");
}

namespace {

void check_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw DomainError(std::string(what) + " contains a non-finite value");
    }
}

}  // namespace

void Field1D::validate() const {
    grid.validate();
    if (values.size() != static_cast<std::size_t>(grid.n))
        throw PreconditionError("field has " + std::to_string(values.size()) + " values for a grid of " +
                                std::to_string(grid.n) + " cells");
    check_finite(values, "field");
}

void Field2D::validate() const {
    gridx.validate();
    gridy.validate();
    if (values.size() != static_cast<std::size_t>(gridx.n) * gridy.n)
        throw PreconditionError("2-d field size does not match nx*ny");
    check_finite(values, "field");
}

double min_value(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }
double max_value(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace fida
