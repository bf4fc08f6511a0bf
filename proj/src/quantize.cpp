#include "cmfilter/quantize.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "cmfilter/csv_io.hpp"
#include "cmfilter/errors.hpp"
#include "cmfilter/rng.hpp"

namespace cmf {

Grid::Grid(StateSpace space, std::vector<int> A_per_dim) : space_(std::move(space)), A_(std::move(A_per_dim)) {
    if (static_cast<int>(A_.size()) != space_.dim())
        throw DomainError("grid resolution list must match state dimension");
    long long total = 1;
    for (int a : A_) {
        if (a < 1) throw DomainError("grid resolution must be positive");
        total *= a;
        if (total > (1LL << 28)) throw DomainError("grid too large");
    }
    total_ = static_cast<int>(total);
    centers_.reserve(static_cast<std::size_t>(total_));
    for (int l = 0; l < total_; ++l) {
        auto idx = unravel(l);
        Vector c(dim());
        for (int i = 0; i < dim(); ++i) c[i] = space_.lower[i] + (idx[i] + 0.5) * width(i);
        centers_.push_back(std::move(c));
    }
}

Grid::Grid(StateSpace space, int A) : Grid(space, std::vector<int>(static_cast<std::size_t>(space.dim()), A)) {}

double Grid::width(int coord) const {
    return (space_.upper[coord] - space_.lower[coord]) / A_[static_cast<std::size_t>(coord)];
}

std::vector<int> Grid::unravel(int l) const {
    std::vector<int> idx(A_.size());
    for (int i = dim() - 1; i >= 0; --i) {
        idx[static_cast<std::size_t>(i)] = l % A_[static_cast<std::size_t>(i)];
        l /= A_[static_cast<std::size_t>(i)];
    }
    return idx;
}

int Grid::ravel(const std::vector<int>& idx) const {
    int l = 0;
    for (std::size_t i = 0; i < A_.size(); ++i) l = l * A_[i] + idx[i];
    return l;
}

void Grid::cell_bounds(int l, Vector& lo, Vector& hi) const {
    auto idx = unravel(l);
    lo.resize(dim());
    hi.resize(dim());
    for (int i = 0; i < dim(); ++i) {
        lo[i] = space_.lower[i] + idx[static_cast<std::size_t>(i)] * width(i);
        hi[i] = lo[i] + width(i);
    }
}

int Grid::index(const Vector& x) const {
    if (!space_.contains(x)) throw DomainError("point outside state space: " + format_point(x));
    std::vector<int> idx(A_.size());
    for (int i = 0; i < dim(); ++i) {
        const int a = A_[static_cast<std::size_t>(i)];
        double u = (x[i] - space_.lower[i]) / (space_.upper[i] - space_.lower[i]) * a;
        int k = static_cast<int>(std::floor(u));
        // guard against rounding at cell faces: enforce left-closed cells exactly
        double lo = space_.lower[i] + k * width(i);
        if (k > 0 && x[i] < lo) --k;
        else if (k + 1 < a && x[i] >= space_.lower[i] + (k + 1) * width(i)) ++k;
        idx[static_cast<std::size_t>(i)] = std::clamp(k, 0, a - 1);
    }
    return ravel(idx);
}

int quantize_point(const Grid& grid, const Vector& x) { return grid.index(x); }

std::vector<int> marginal_approximation(const Grid& grid, const Trajectory& traj) {
    std::vector<int> out;
    out.reserve(traj.states.size());
    for (const auto& x : traj.states) out.push_back(grid.index(x));
    return out;
}

std::string BuildMethod::name() const {
    switch (kind) {
        case Kind::kQuadrature: return "quadrature";
        case Kind::kMonteCarlo: return "monte_carlo";
        case Kind::kExact: return "exact";
    }
    return "unknown";
}

namespace {

struct Rule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

template <unsigned P>
Rule make_rule() {
    using G = boost::math::quadrature::gauss<double, P>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    Rule r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(w[i]);
        } else {
            r.x.push_back(-a[i]);
            r.w.push_back(w[i]);
            r.x.push_back(a[i]);
            r.w.push_back(w[i]);
        }
    }
    return r;
}

Rule gauss_legendre(int order) {
    switch (order) {
        case 2: return make_rule<2>();
        case 3: return make_rule<3>();
        case 4: return make_rule<4>();
        case 5: return make_rule<5>();
        case 6: return make_rule<6>();
        case 7: return make_rule<7>();
        case 8: return make_rule<8>();
        case 10: return make_rule<10>();
        case 15: return make_rule<15>();
        case 20: return make_rule<20>();
        default: throw ConstructionError("unsupported Gauss-Legendre order " + std::to_string(order), -1);
    }
}

// Quadrature nodes and weights for every cell of a grid.
struct CellRule {
    std::vector<Vector> nodes;  // total_points * q^M entries, cell-major
    std::vector<double> weights;
    int per_cell = 0;
};

CellRule cell_rule(const Grid& grid, int order) {
    Rule r = gauss_legendre(order);
    const int q = static_cast<int>(r.x.size());
    const int M = grid.dim();
    int per = 1;
    for (int i = 0; i < M; ++i) per *= q;
    CellRule cr;
    cr.per_cell = per;
    cr.nodes.reserve(static_cast<std::size_t>(per) * grid.total_points());
    cr.weights.reserve(cr.nodes.capacity());
    Vector lo, hi;
    std::vector<int> odo(static_cast<std::size_t>(M));
    for (int l = 0; l < grid.total_points(); ++l) {
        grid.cell_bounds(l, lo, hi);
        std::fill(odo.begin(), odo.end(), 0);
        for (int k = 0; k < per; ++k) {
            Vector p(M);
            double w = 1.0;
            for (int i = 0; i < M; ++i) {
                double half = 0.5 * (hi[i] - lo[i]);
                p[i] = lo[i] + half * (1.0 + r.x[static_cast<std::size_t>(odo[static_cast<std::size_t>(i)])]);
                w *= half * r.w[static_cast<std::size_t>(odo[static_cast<std::size_t>(i)])];
            }
            cr.nodes.push_back(std::move(p));
            cr.weights.push_back(w);
            for (int i = M - 1; i >= 0; --i) {
                if (++odo[static_cast<std::size_t>(i)] < q) break;
                odo[static_cast<std::size_t>(i)] = 0;
            }
        }
    }
    return cr;
}

void normalize_row(Matrix& m, int row, const std::string& what) {
    double s = m.row(row).sum();
    if (!(s > 0) || !std::isfinite(s))
        throw ConstructionError(what + ": row " + std::to_string(row) +
                                    " has no mass inside the state space",
                                row);
    m.row(row) /= s;
}

bool law_matches(const SystemSpec& spec, const Grid& grid) {
    if (!spec.finite_law) return false;
    return spec.finite_law->states_per_dim == grid.A_per_dim() &&
           spec.space.lower == grid.space().lower && spec.space.upper == grid.space().upper;
}

}  // namespace

BuildMethod auto_method(const SystemSpec& spec, const Grid& grid, int mc_samples) {
    if (law_matches(spec, grid)) return BuildMethod::exact();
    if (spec.kernel.density) return BuildMethod::quadrature();
    return BuildMethod::monte_carlo(mc_samples);
}

QuantizedChain build_chain(const SystemSpec& spec, const Grid& grid, const BuildMethod& method,
                           std::uint64_t seed) {
    if (spec.kernel.order != 1)
        throw ConstructionError("quantized chains require a first-order kernel", -1);
    const int K = grid.total_points();
    QuantizedChain ch;
    ch.grid = grid;
    ch.method = method;
    ch.transition = Matrix::Zero(K, K);
    ch.initial = Vector::Zero(K);

    switch (method.kind) {
        case BuildMethod::Kind::kExact: {
            if (!law_matches(spec, grid))
                throw ConstructionError("exact build needs a finite-state law on this grid", -1);
            ch.transition = spec.finite_law->transition;
            ch.initial = spec.finite_law->initial;
            for (int k = 0; k < K; ++k) normalize_row(ch.transition, k, "exact chain");
            ch.initial /= ch.initial.sum();
            break;
        }
        case BuildMethod::Kind::kQuadrature: {
            if (!spec.kernel.density)
                throw ConstructionError("quadrature build needs a transition density", -1);
            CellRule cr = cell_rule(grid, method.quad_order);
            const int per = cr.per_cell;
            for (int k = 0; k < K; ++k) {
                const Vector& src = grid.center(k);
                for (int l = 0; l < K; ++l) {
                    double mass = 0.0;
                    const std::size_t base = static_cast<std::size_t>(l) * per;
                    for (int q = 0; q < per; ++q)
                        mass += cr.weights[base + q] * spec.kernel.density(1, src, cr.nodes[base + q]);
                    ch.transition(k, l) = mass;
                }
                normalize_row(ch.transition, k, "quadrature chain");
            }
            if (spec.kernel.initial_density) {
                for (int l = 0; l < K; ++l) {
                    double mass = 0.0;
                    const std::size_t base = static_cast<std::size_t>(l) * per;
                    for (int q = 0; q < per; ++q)
                        mass += cr.weights[base + q] * spec.kernel.initial_density(cr.nodes[base + q]);
                    ch.initial[l] = mass;
                }
            } else {
                Rng rng(seed, kChainStream, static_cast<std::uint64_t>(K));
                const int n = std::max(method.n_samples, 100000);
                for (int s = 0; s < n; ++s) ch.initial[grid.index(spec.kernel.initial_sampler(rng))] += 1.0;
            }
            break;
        }
        case BuildMethod::Kind::kMonteCarlo: {
            if (method.n_samples < 1) throw ConstructionError("Monte Carlo build needs n_samples >= 1", -1);
            for (int k = 0; k < K; ++k) {
                Rng rng(seed, kChainStream, static_cast<std::uint64_t>(k));
                std::vector<Vector> hist{grid.center(k)};
                for (int s = 0; s < method.n_samples; ++s) {
                    Vector nx = spec.kernel.sampler(1, hist, rng);
                    ch.transition(k, grid.index(nx)) += 1.0;
                }
                normalize_row(ch.transition, k, "Monte Carlo chain");
            }
            Rng rng(seed, kChainStream, static_cast<std::uint64_t>(K));
            for (int s = 0; s < method.n_samples; ++s)
                ch.initial[grid.index(spec.kernel.initial_sampler(rng))] += 1.0;
            break;
        }
    }
    double s = ch.initial.sum();
    if (!(s > 0)) throw ConstructionError("initial law has no mass inside the state space", -1);
    ch.initial /= s;
    return ch;
}

CWeakResult cweak_diagnostic(const Grid& grid, const Trajectory& traj,
                             const std::function<double(const Vector&)>& f,
                             const std::function<double(double)>& modulus) {
    CWeakResult r;
    double max_dist = 0.0;
    for (const auto& x : traj.states) {
        const Vector& c = grid.center(grid.index(x));
        r.max_deviation = std::max(r.max_deviation, std::abs(f(c) - f(x)));
        max_dist = std::max(max_dist, (c - x).lpNorm<Eigen::Infinity>());
    }
    r.modulus_bound = modulus ? modulus(max_dist) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

void write_chain_csv(std::ostream& os, const QuantizedChain& chain) {
    const Grid& g = chain.grid;
    std::vector<double> lo(g.space().lower.data(), g.space().lower.data() + g.dim());
    std::vector<double> hi(g.space().upper.data(), g.space().upper.data() + g.dim());
    std::vector<double> a(g.A_per_dim().begin(), g.A_per_dim().end());
    write_metadata(os, {{"M", std::to_string(g.dim())},
                        {"A", format_list(a, ';')},
                        {"lower", format_list(lo, ';')},
                        {"upper", format_list(hi, ';')},
                        {"method", chain.method.name()},
                        {"law", "quantized_chain"}});
    const int K = g.total_points();
    os << "row";
    for (int l = 0; l < K; ++l) os << ",p_" << l;
    os << "\ninit";
    for (int l = 0; l < K; ++l) os << "," << format_double(chain.initial[l]);
    os << "\n";
    for (int k = 0; k < K; ++k) {
        os << k;
        for (int l = 0; l < K; ++l) os << "," << format_double(chain.transition(k, l));
        os << "\n";
    }
}

QuantizedChain read_chain_csv(std::istream& is) {
    CsvTable tab = read_csv(is, true);
    auto need = [&](const char* key) -> const std::string& {
        auto it = tab.meta.find(key);
        if (it == tab.meta.end()) throw ParseError(std::string("chain file lacks '") + key + "'", 0);
        return it->second;
    };
    auto list = [](const std::string& s) {
        std::vector<double> v;
        for (const auto& tok : split(s, ';')) v.push_back(parse_double(tok, 0));
        return v;
    };
    auto lo = list(need("lower")), hi = list(need("upper")), av = list(need("A"));
    Vector vlo = Eigen::Map<Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    Vector vhi = Eigen::Map<Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    std::vector<int> A;
    for (double d : av) A.push_back(static_cast<int>(d));
    QuantizedChain ch;
    ch.grid = Grid(StateSpace(vlo, vhi), A);
    const std::string& m = need("method");
    ch.method = m == "exact" ? BuildMethod::exact()
                : m == "monte_carlo" ? BuildMethod::monte_carlo(1)
                                     : BuildMethod::quadrature();
    const int K = ch.grid.total_points();
    if (static_cast<int>(tab.rows.size()) != K + 1 || static_cast<int>(tab.header.size()) != K + 1)
        throw ParseError("chain file has wrong shape", 0);
    if (tab.labels[0] != "init") throw ParseError("row " + std::to_string(tab.row_lines[0]) + ": expected init row", tab.row_lines[0]);
    ch.initial = Eigen::Map<Vector>(tab.rows[0].data(), K);
    ch.transition.resize(K, K);
    for (int k = 0; k < K; ++k) {
        if (tab.labels[static_cast<std::size_t>(k) + 1] != std::to_string(k))
            throw ParseError("row " + std::to_string(tab.row_lines[static_cast<std::size_t>(k) + 1]) +
                                 ": row label out of sequence",
                             tab.row_lines[static_cast<std::size_t>(k) + 1]);
        for (int l = 0; l < K; ++l) ch.transition(k, l) = tab.rows[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(l)];
    }
    return ch;
}

}  // namespace cmf
