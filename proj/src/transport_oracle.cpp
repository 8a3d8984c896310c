#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pme/common.hpp"
#include "pme/transport.hpp"

namespace pme {
namespace {

double torus_cost_sq(const AtomicMeasure& u, const AtomicMeasure& v,
                     std::size_t i, std::size_t j) {
    double sq = 0.0;
    for (int a = 0; a < u.dim; ++a) {
        double d = torus_dist1(u.points[i * u.dim + a] - v.points[j * v.dim + a]);
        sq += d * d;
    }
    return sq;
}

std::vector<double> cost_matrix(const AtomicMeasure& u,
                                const AtomicMeasure& v) {
    std::vector<double> c(u.count() * v.count());
    for (std::size_t i = 0; i < u.count(); ++i)
        for (std::size_t j = 0; j < v.count(); ++j)
            c[i * v.count() + j] = torus_cost_sq(u, v, i, j);
    return c;
}

// canonical cost of a plan, summed in lexicographic (i, j) order so two
// solvers producing the same plan report the same double
double plan_cost(const std::vector<double>& flow, const std::vector<double>& c,
                 std::size_t rows, std::size_t cols) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (flow[i * cols + j] > 0.0) s += flow[i * cols + j] * c[i * cols + j];
    return s;
}

bool equal_weights(const AtomicMeasure& m) {
    double w0 = m.weights[0];
    for (double w : m.weights)
        if (std::abs(w - w0) > 1e-14) return false;
    return true;
}

// ---- exhaustive assignment ------------------------------------------------

std::vector<std::size_t> best_permutation(const std::vector<double>& c,
                                          std::size_t n) {
    std::vector<std::size_t> perm(n), best(n);
    std::iota(perm.begin(), perm.end(), 0);
    best = perm;
    double best_cost = 1e300;
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += c[i * n + perm[i]];
        if (s < best_cost) {
            best_cost = s;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// ---- Hungarian (shortest augmenting paths with potentials) ----------------

std::vector<std::size_t> hungarian(const std::vector<double>& c,
                                   std::size_t n) {
    const double INF = 1e300;
    std::vector<double> pot_u(n + 1, 0.0), pot_v(n + 1, 0.0);
    std::vector<std::size_t> way(n + 1, 0), match(n + 1, n);
    for (std::size_t i = 0; i < n; ++i) {
        match[n] = i;
        std::size_t j0 = n;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            std::size_t i0 = match[j0], j1 = 0;
            double delta = INF;
            for (std::size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                double cur = c[i0 * n + j] - pot_u[i0] - pot_v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    pot_u[match[j]] += delta;
                    pot_v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != n);
        do {
            std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<std::size_t> assign(n);
    for (std::size_t j = 0; j < n; ++j)
        if (match[j] != n) assign[match[j]] = j;
    return assign;
}

// ---- transportation simplex (MODI with Bland's anti-cycling rule) ---------

struct SimplexState {
    std::size_t rows, cols;
    std::vector<double> flow;
    std::vector<char> basic;
    long pivots = 0;
};

void northwest_corner(SimplexState& st, std::vector<double> supply,
                      std::vector<double> demand) {
    std::size_t i = 0, j = 0;
    while (i < st.rows && j < st.cols) {
        double q = std::min(supply[i], demand[j]);
        st.flow[i * st.cols + j] = q;
        st.basic[i * st.cols + j] = 1;
        supply[i] -= q;
        demand[j] -= q;
        if (supply[i] <= demand[j])
            ++i;
        else
            ++j;
    }
}

struct UnionFind {
    std::vector<std::size_t> p;
    explicit UnionFind(std::size_t n) : p(n) {
        for (std::size_t k = 0; k < n; ++k) p[k] = k;
    }
    std::size_t find(std::size_t x) {
        while (p[x] != x) x = p[x] = p[p[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        p[a] = b;
        return true;
    }
};

// the basis must be a spanning tree with rows+cols-1 cells; degenerate
// northwest starts can come up short, so patch with zero-flow cells that
// join components
void repair_basis(SimplexState& st) {
    UnionFind uf(st.rows + st.cols);
    std::size_t count = 0;
    for (std::size_t i = 0; i < st.rows; ++i)
        for (std::size_t j = 0; j < st.cols; ++j)
            if (st.basic[i * st.cols + j]) {
                if (!uf.unite(i, st.rows + j)) {
                    // redundant basic cell (cycle): drop it if zero flow
                    if (st.flow[i * st.cols + j] == 0.0)
                        st.basic[i * st.cols + j] = 0;
                } else {
                    ++count;
                }
            }
    for (std::size_t i = 0; i < st.rows && count + 1 < st.rows + st.cols; ++i)
        for (std::size_t j = 0; j < st.cols && count + 1 < st.rows + st.cols;
             ++j) {
            if (st.basic[i * st.cols + j]) continue;
            if (uf.unite(i, st.rows + j)) {
                st.basic[i * st.cols + j] = 1;
                ++count;
            }
        }
}

// potentials from the basic spanning tree
void solve_potentials(const SimplexState& st, const std::vector<double>& c,
                      std::vector<double>& pu, std::vector<double>& pv) {
    const double UNSET = 1e301;
    std::fill(pu.begin(), pu.end(), UNSET);
    std::fill(pv.begin(), pv.end(), UNSET);
    pu[0] = 0.0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < st.rows; ++i)
            for (std::size_t j = 0; j < st.cols; ++j) {
                if (!st.basic[i * st.cols + j]) continue;
                if (pu[i] != UNSET && pv[j] == UNSET) {
                    pv[j] = c[i * st.cols + j] - pu[i];
                    changed = true;
                } else if (pv[j] != UNSET && pu[i] == UNSET) {
                    pu[i] = c[i * st.cols + j] - pv[j];
                    changed = true;
                }
            }
    }
}

// cycle through the basis tree from the entering cell (ei, ej): legs
// alternate row/column over basic cells; the closing leg runs up column ej
bool find_cycle(const SimplexState& st, std::size_t ei, std::size_t ej,
                std::vector<std::size_t>& cycle) {
    struct Node {
        std::size_t i, j;
        int parent;
        bool row_move;  // next leg along the row
    };
    std::vector<Node> stack;
    stack.push_back({ei, ej, -1, true});
    for (std::size_t sp = 0; sp < stack.size(); ++sp) {
        Node nd = stack[sp];
        if (nd.row_move) {
            for (std::size_t j = 0; j < st.cols; ++j) {
                if (j == nd.j || !st.basic[nd.i * st.cols + j]) continue;
                stack.push_back({nd.i, j, static_cast<int>(sp), false});
            }
        } else {
            if (nd.j == ej && nd.i != ei) {
                // column leg back to the entering cell closes the cycle
                cycle.clear();
                int cur = static_cast<int>(sp);
                while (cur != -1) {
                    cycle.push_back(stack[cur].i * st.cols + stack[cur].j);
                    cur = stack[cur].parent;
                }
                std::reverse(cycle.begin(), cycle.end());
                return true;
            }
            for (std::size_t i = 0; i < st.rows; ++i) {
                if (i == nd.i || !st.basic[i * st.cols + nd.j]) continue;
                stack.push_back({i, nd.j, static_cast<int>(sp), true});
            }
        }
    }
    return false;
}

std::vector<double> transport_simplex(const std::vector<double>& c,
                                      const std::vector<double>& supply,
                                      const std::vector<double>& demand,
                                      long& pivots) {
    SimplexState st;
    st.rows = supply.size();
    st.cols = demand.size();
    st.flow.assign(st.rows * st.cols, 0.0);
    st.basic.assign(st.rows * st.cols, 0);
    northwest_corner(st, supply, demand);
    repair_basis(st);

    std::vector<double> pu(st.rows), pv(st.cols);
    const long max_pivots = 200000;
    for (;;) {
        require(st.pivots < max_pivots, "lp_oracle: simplex pivot limit");
        solve_potentials(st, c, pu, pv);
        // entering cell: Bland's rule (first negative reduced cost)
        std::size_t ei = st.rows, ej = st.cols;
        for (std::size_t i = 0; i < st.rows && ei == st.rows; ++i)
            for (std::size_t j = 0; j < st.cols; ++j) {
                if (st.basic[i * st.cols + j]) continue;
                if (c[i * st.cols + j] - pu[i] - pv[j] < -1e-12) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        if (ei == st.rows) break;  // optimal
        std::vector<std::size_t> cycle;
        require(find_cycle(st, ei, ej, cycle), "lp_oracle: no pivot cycle");
        // odd positions lose flow
        double theta = 1e300;
        std::size_t leave = 0;
        for (std::size_t k = 1; k < cycle.size(); k += 2) {
            if (st.flow[cycle[k]] < theta) {
                theta = st.flow[cycle[k]];
                leave = cycle[k];
            }
        }
        for (std::size_t k = 0; k < cycle.size(); ++k) {
            if (k % 2 == 0)
                st.flow[cycle[k]] += theta;
            else
                st.flow[cycle[k]] -= theta;
        }
        st.basic[ei * st.cols + ej] = 1;
        st.basic[leave] = 0;
        st.flow[leave] = 0.0;
        ++st.pivots;
    }
    pivots = st.pivots;
    return st.flow;
}

}  // namespace

TransportResult lp_oracle(const AtomicMeasure& u, const AtomicMeasure& v,
                          OracleMode mode) {
    require(u.dim == v.dim, "lp_oracle: dimension mismatch");
    require(u.count() >= 1 && v.count() >= 1, "lp_oracle: empty measure");
    require(u.count() <= 64 && v.count() <= 64,
            "lp_oracle: size limit exceeded (64 atoms per side)");
    double su = std::accumulate(u.weights.begin(), u.weights.end(), 0.0);
    double sv = std::accumulate(v.weights.begin(), v.weights.end(), 0.0);
    require(std::abs(su - 1.0) < 1e-9 && std::abs(sv - 1.0) < 1e-9,
            "lp_oracle: weights must sum to 1");

    std::vector<double> c = cost_matrix(u, v);
    TransportResult res;
    res.method = TransportResult::Method::lp_oracle;

    const bool assignment = u.count() == v.count() && equal_weights(u) &&
                            equal_weights(v);
    OracleMode pick = mode;
    if (pick == OracleMode::automatic) {
        if (assignment)
            pick = u.count() <= 8 ? OracleMode::enumerate : OracleMode::hungarian;
        else
            pick = OracleMode::simplex;
    }

    const std::size_t n = u.count(), mcols = v.count();
    if (pick == OracleMode::enumerate || pick == OracleMode::hungarian) {
        require(assignment, "lp_oracle: assignment mode needs equal weights");
        std::vector<std::size_t> assign =
            pick == OracleMode::enumerate ? best_permutation(c, n)
                                          : hungarian(c, n);
        std::vector<double> flow(n * mcols, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            flow[i * mcols + assign[i]] = u.weights[i];
        res.raw_cost = plan_cost(flow, c, n, mcols);
        res.iterations = static_cast<long>(n);
    } else {
        long pivots = 0;
        std::vector<double> flow =
            transport_simplex(c, u.weights, v.weights, pivots);
        res.raw_cost = plan_cost(flow, c, n, mcols);
        res.iterations = pivots;
    }
    res.distance = std::sqrt(std::max(res.raw_cost, 0.0));
    return res;
}

}  // namespace pme
