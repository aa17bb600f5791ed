#include "besi/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "besi/error.hpp"

namespace besi {

void MassDistribution::validate() const {
    if (masses.size() == 0) throw ConstraintError("distribution has empty support");
    if (support.rows() != masses.size() || support.cols() != 3) {
        throw ShapeError("distribution support must be k x 3 with k masses");
    }
    if (!support.allFinite()) throw ConstraintError("distribution support is not finite");
    for (Index i = 0; i < masses.size(); ++i) {
        if (!(masses[i] >= 0.0) || !std::isfinite(masses[i])) {
            throw ConstraintError("distribution mass " + std::to_string(i) + " is negative");
        }
    }
    if (std::abs(masses.sum() - 1.0) > 1e-12) throw ConstraintError("distribution mass != 1");
}

MassDistribution MassDistribution::atom(const Eigen::Vector3d& position) {
    MassDistribution out;
    out.support = position.transpose();
    out.masses = Vector::Ones(1);
    return out;
}

MassDistribution MassDistribution::from_weights(Matrix support, const Vector& weights) {
    const double total = weights.sum();
    if (!(total > 0.0)) throw DegenerateInputError("distribution weights sum to zero");
    MassDistribution out;
    out.support = std::move(support);
    out.masses = weights / total;
    out.validate();
    return out;
}

MassDistribution MassDistribution::from_estimate(const SourceEstimate& estimate,
                                                 const SourceSpace& space, bool squared,
                                                 double threshold) {
    if (estimate.n() != space.n()) throw ShapeError("estimate and source space sizes differ");
    Vector a = estimate.block_amplitudes();
    if (squared) a = a.array().square();
    const double top = a.size() ? a.maxCoeff() : 0.0;
    if (!(top > 0.0)) throw DegenerateInputError("estimate is identically zero");
    std::vector<Index> keep;
    for (Index k = 0; k < a.size(); ++k) {
        if (a[k] >= threshold * top) keep.push_back(k);
    }
    Matrix support(static_cast<Index>(keep.size()), 3);
    Vector w(static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        support.row(static_cast<Index>(i)) = space.positions().row(keep[i]);
        w[static_cast<Index>(i)] = a[keep[i]];
    }
    return from_weights(std::move(support), w);
}

double emd_single_truth(const MassDistribution& estimate, const Eigen::Vector3d& truth) {
    estimate.validate();
    double total = 0.0;
    for (Index i = 0; i < estimate.size(); ++i) {
        total += estimate.masses[i] * (estimate.support.row(i).transpose() - truth).norm();
    }
    return total;
}

namespace {

// Transportation simplex on a dense cost matrix. The basis is a spanning
// tree on rows and columns with exactly n1 + n2 - 1 cells.
class Transport {
public:
    Transport(const Vector& supply, const Vector& demand, const Matrix& cost)
        : n1_(supply.size()), n2_(demand.size()), cost_(cost), flow_(Matrix::Zero(n1_, n2_)),
          basic_(n1_, std::vector<char>(static_cast<std::size_t>(n2_), 0)) {
        northwest(supply, demand);
    }

    double solve() {
        const double tol = 1e-12 * std::max(1.0, cost_.cwiseAbs().maxCoeff());
        const long max_pivots = 50L * (n1_ + n2_) * (n1_ + n2_) + 1000;
        for (long pivot = 0; pivot < max_pivots; ++pivot) {
            potentials();
            Index ei = -1, ej = -1;
            double best = -tol;
            for (Index i = 0; i < n1_; ++i) {
                for (Index j = 0; j < n2_; ++j) {
                    if (basic_[i][j]) continue;
                    const double r = cost_(i, j) - u_[i] - v_[j];
                    if (r < best) {
                        best = r;
                        ei = i;
                        ej = j;
                    }
                }
            }
            if (ei < 0) return (flow_.array() * cost_.array()).sum();
            enter(ei, ej);
        }
        throw NumericalError("emd: transportation simplex did not terminate");
    }

private:
    void northwest(Vector s, Vector d) {
        Index i = 0, j = 0;
        for (;;) {
            const double f = std::max(0.0, std::min(s[i], d[j]));
            flow_(i, j) = f;
            basic_[i][j] = 1;
            s[i] -= f;
            d[j] -= f;
            if (i == n1_ - 1 && j == n2_ - 1) break;
            if (j == n2_ - 1 || (i < n1_ - 1 && s[i] <= d[j])) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    // u_i + v_j = c_ij on basic cells, u_0 = 0.
    void potentials() {
        u_.assign(static_cast<std::size_t>(n1_), std::numeric_limits<double>::quiet_NaN());
        v_.assign(static_cast<std::size_t>(n2_), std::numeric_limits<double>::quiet_NaN());
        u_[0] = 0.0;
        std::deque<Index> queue{0};  // rows >= 0, columns encoded as -(j+1)
        while (!queue.empty()) {
            const Index node = queue.front();
            queue.pop_front();
            if (node >= 0) {
                for (Index j = 0; j < n2_; ++j) {
                    if (basic_[node][j] && std::isnan(v_[j])) {
                        v_[j] = cost_(node, j) - u_[node];
                        queue.push_back(-(j + 1));
                    }
                }
            } else {
                const Index j = -node - 1;
                for (Index i = 0; i < n1_; ++i) {
                    if (basic_[i][j] && std::isnan(u_[i])) {
                        u_[i] = cost_(i, j) - v_[j];
                        queue.push_back(i);
                    }
                }
            }
        }
    }

    // Tree path from column ej to row ei as a list of basic cells.
    std::vector<std::pair<Index, Index>> path(Index ei, Index ej) const {
        const Index nodes = n1_ + n2_;
        std::vector<Index> parent(static_cast<std::size_t>(nodes), -2);
        const Index start = n1_ + ej;
        parent[start] = -1;
        std::deque<Index> queue{start};
        while (!queue.empty() && parent[ei] == -2) {
            const Index node = queue.front();
            queue.pop_front();
            if (node < n1_) {
                for (Index j = 0; j < n2_; ++j) {
                    if (basic_[node][j] && parent[n1_ + j] == -2) {
                        parent[n1_ + j] = node;
                        queue.push_back(n1_ + j);
                    }
                }
            } else {
                const Index j = node - n1_;
                for (Index i = 0; i < n1_; ++i) {
                    if (basic_[i][j] && parent[i] == -2) {
                        parent[i] = node;
                        queue.push_back(i);
                    }
                }
            }
        }
        if (parent[ei] == -2) throw NumericalError("emd: basis is not a spanning tree");
        // walk back from row ei to column ej, then reverse
        std::vector<std::pair<Index, Index>> cells;
        for (Index node = ei; parent[node] != -1; node = parent[node]) {
            const Index prev = parent[node];
            cells.push_back(node < n1_ ? std::make_pair(node, prev - n1_)
                                       : std::make_pair(prev, node - n1_));
        }
        std::reverse(cells.begin(), cells.end());
        return cells;
    }

    void enter(Index ei, Index ej) {
        const auto cells = path(ei, ej);
        // cycle: (ei,ej) +, then cells alternate -, +, -, ...
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = 0;
        for (std::size_t c = 0; c < cells.size(); c += 2) {
            const double f = flow_(cells[c].first, cells[c].second);
            if (f < theta) {
                theta = f;
                leave = c;
            }
        }
        flow_(ei, ej) += theta;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            flow_(cells[c].first, cells[c].second) += (c % 2 == 0 ? -theta : theta);
        }
        flow_(cells[leave].first, cells[leave].second) = 0.0;
        basic_[cells[leave].first][cells[leave].second] = 0;
        basic_[ei][ej] = 1;
    }

    Index n1_, n2_;
    const Matrix& cost_;
    Matrix flow_;
    std::vector<std::vector<char>> basic_;
    std::vector<double> u_, v_;
};

}  // namespace

double emd(const MassDistribution& a, const MassDistribution& b) {
    a.validate();
    b.validate();
    Matrix cost(a.size(), b.size());
    for (Index i = 0; i < a.size(); ++i) {
        for (Index j = 0; j < b.size(); ++j) cost(i, j) = (a.support.row(i) - b.support.row(j)).norm();
    }
    Transport problem(a.masses, b.masses, cost);
    return std::max(0.0, problem.solve());
}

Index index_of_max(const SourceEstimate& estimate) {
    const Vector a = estimate.block_amplitudes();
    Index best = -1;
    double top = 0.0;
    for (Index k = 0; k < a.size(); ++k) {
        if (a[k] > top) {
            top = a[k];
            best = k;
        }
    }
    if (best < 0) throw DegenerateInputError("depth_of_max: estimate is identically zero");
    return best;
}

double depth_of_max(const SourceEstimate& estimate, const SourceSpace& space) {
    if (estimate.n() != space.n()) throw ShapeError("estimate and source space sizes differ");
    return space.depths()[index_of_max(estimate)];
}

std::size_t depth_error_bin(double e) {
    if (e > 20.0) return 0;
    if (e > 15.0) return 1;
    if (e > 10.0) return 2;
    if (e > 5.0) return 3;
    if (e > 1.0) return 4;
    return 5;
}

DepthErrorTable depth_error_bins(const std::vector<DepthErrorRecord>& records) {
    DepthErrorTable table;
    std::map<std::string, std::array<std::size_t, 6>> counts;
    for (const auto& r : records) {
        auto& c = counts.try_emplace(r.method, std::array<std::size_t, 6>{}).first->second;
        ++c[depth_error_bin(std::abs(r.abs_error_mm))];
    }
    for (const auto& [method, c] : counts) {
        std::size_t total = 0;
        for (auto v : c) total += v;
        std::array<double, 6> pct{};
        for (std::size_t b = 0; b < 6; ++b) pct[b] = 100.0 * static_cast<double>(c[b]) / static_cast<double>(total);
        table.percent[method] = pct;
        table.count[method] = total;
    }
    return table;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw ConstraintError("quantile of an empty list");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::vector<double> values) {
    if (values.empty()) throw ConstraintError("summarize: empty list");
    std::sort(values.begin(), values.end());
    Summary s;
    s.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
    }
    s.median = quantile_sorted(values, 0.5);
    s.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
    return s;
}

Regression depth_regression(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("regression: length mismatch");
    if (x.size() < 2) throw ConstraintError("regression: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ConstraintError("regression: true depths are constant");
    Regression r;
    r.count = x.size();
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = y[i] - r.intercept - r.slope * x[i];
            ssr += e * e;
        }
        const double s2 = ssr / (n - 2.0);
        r.slope_se = std::sqrt(s2 / sxx);
        r.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    constexpr double z = 1.96;
    r.slope_ci_low = r.slope - z * r.slope_se;
    r.slope_ci_high = r.slope + z * r.slope_se;
    r.intercept_ci_low = r.intercept - z * r.intercept_se;
    r.intercept_ci_high = r.intercept + z * r.intercept_se;
    return r;
}

}  // namespace besi
