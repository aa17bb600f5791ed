#include "besi/kernels.hpp"

#include <limits>

#include <omp.h>

#include "besi/forward.hpp"

namespace besi::kernels {

namespace {

// Fills column block k of `out` for all electrodes.
void fill_source(const SphereHeadModel& model, const SourceSpace& space, Index k, Matrix& out) {
    constexpr double kMomentScale = 1e-9;  // nA*m -> A*m
    constexpr double kVoltScale = 1e6;     // V -> uV
    const Index d = space.d();
    const Eigen::Vector3d source = space.position(k);
    for (Index i = 0; i < d; ++i) {
        const Eigen::Vector3d moment = space.basis(k).row(i).transpose() * kMomentScale;
        for (Index e = 0; e < model.m(); ++e) {
            const Eigen::Vector3d electrode =
                model.electrode_directions.row(e).transpose() * model.radius_mm;
            out(e, k * d + i) = kVoltScale * sphere_dipole_potential(electrode, source, moment,
                                                                     model.radius_mm,
                                                                     model.conductivity);
        }
    }
}

void nearest_one(const Matrix& from, const Matrix& to, Index i, Index& best, double& best_dist) {
    best = -1;
    double best_sq = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < to.rows(); ++j) {
        const double sq = (from.row(i) - to.row(j)).squaredNorm();
        if (sq < best_sq) {
            best_sq = sq;
            best = j;
        }
    }
    best_dist = std::sqrt(best_sq);
}

}  // namespace

Matrix sphere_leadfield_serial(const SphereHeadModel& model, const SourceSpace& space) {
    Matrix out(model.m(), space.n() * space.d());
    for (Index k = 0; k < space.n(); ++k) fill_source(model, space, k, out);
    return out;
}

Matrix sphere_leadfield_omp(const SphereHeadModel& model, const SourceSpace& space) {
    Matrix out(model.m(), space.n() * space.d());
    const Index n = space.n();
#pragma omp parallel for schedule(static)
    for (Index k = 0; k < n; ++k) fill_source(model, space, k, out);
    return out;
}

void average_reference(Matrix& lead_field) {
    if (lead_field.rows() == 0) return;
    const Eigen::RowVectorXd mean = lead_field.colwise().mean();
    lead_field.rowwise() -= mean;
}

void nearest_neighbours_serial(const Matrix& from, const Matrix& to, std::vector<Index>& index,
                               std::vector<double>& distance) {
    index.assign(from.rows(), -1);
    distance.assign(from.rows(), 0.0);
    for (Index i = 0; i < from.rows(); ++i) nearest_one(from, to, i, index[i], distance[i]);
}

void nearest_neighbours_omp(const Matrix& from, const Matrix& to, std::vector<Index>& index,
                            std::vector<double>& distance) {
    index.assign(from.rows(), -1);
    distance.assign(from.rows(), 0.0);
    const Index count = from.rows();
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < count; ++i) nearest_one(from, to, i, index[i], distance[i]);
}

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int threads) {
    if (threads >= 1) omp_set_num_threads(threads);
}

}  // namespace besi::kernels
