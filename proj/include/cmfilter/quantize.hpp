#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmfilter/model.hpp"

namespace cmf {

// Uniform tensor-product quantizer on a box. Cells are half-open [lo, hi) per
// coordinate; the upper face of Z belongs to the last cell. Linear index is
// row-major (last coordinate fastest).
class Grid {
public:
    Grid() = default;
    Grid(StateSpace space, std::vector<int> A_per_dim);
    Grid(StateSpace space, int A);  // same A in every coordinate

    const StateSpace& space() const { return space_; }
    const std::vector<int>& A_per_dim() const { return A_; }
    int dim() const { return space_.dim(); }
    int total_points() const { return total_; }
    double width(int coord) const;
    const Vector& center(int l) const { return centers_[static_cast<std::size_t>(l)]; }
    const std::vector<Vector>& centers() const { return centers_; }
    // Per-coordinate cell bounds of cell l.
    void cell_bounds(int l, Vector& lo, Vector& hi) const;

    int index(const Vector& x) const;
    std::vector<int> unravel(int l) const;
    int ravel(const std::vector<int>& idx) const;

private:
    StateSpace space_;
    std::vector<int> A_;
    int total_ = 0;
    std::vector<Vector> centers_;
};

int quantize_point(const Grid& grid, const Vector& x);

std::vector<int> marginal_approximation(const Grid& grid, const Trajectory& traj);

struct BuildMethod {
    enum class Kind { kQuadrature, kMonteCarlo, kExact };
    Kind kind = Kind::kQuadrature;
    int n_samples = 0;      // Monte Carlo draws per source point
    int quad_order = 6;     // Gauss-Legendre nodes per coordinate per cell

    static BuildMethod quadrature(int order = 6) { return {Kind::kQuadrature, 0, order}; }
    static BuildMethod monte_carlo(int n) { return {Kind::kMonteCarlo, n, 0}; }
    static BuildMethod exact() { return {Kind::kExact, 0, 0}; }
    std::string name() const;
};

struct QuantizedChain {
    Grid grid;
    Matrix transition;  // row k: law of next cell given current center k
    Vector initial;
    BuildMethod method;
};

// Rows are computed from the kernel at time t = 1 (time-homogeneous chain).
QuantizedChain build_chain(const SystemSpec& spec, const Grid& grid, const BuildMethod& method,
                           std::uint64_t seed);

// Chooses exact when the finite law lives on this grid, else quadrature when a
// density exists, else Monte Carlo with mc_samples draws.
BuildMethod auto_method(const SystemSpec& spec, const Grid& grid, int mc_samples);

struct CWeakResult {
    double max_deviation = 0.0;
    double modulus_bound = 0.0;  // modulus(max ell_inf quantization error)
};

// max_t |f(Q_A(x_t)) - f(x_t)|; modulus maps an ell_inf distance to a bound on |f| variation.
CWeakResult cweak_diagnostic(const Grid& grid, const Trajectory& traj,
                             const std::function<double(const Vector&)>& f,
                             const std::function<double(double)>& modulus);

void write_chain_csv(std::ostream& os, const QuantizedChain& chain);
QuantizedChain read_chain_csv(std::istream& is);

}  // namespace cmf
