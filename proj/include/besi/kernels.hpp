#pragma once

#include <vector>

#include "besi/types.hpp"

namespace besi {
struct SphereHeadModel;
}

/// Data-parallel inner loops. Each kernel has a serial reference and an
/// OpenMP variant; both produce bitwise-identical output because every
/// output element is computed by the same sequence of operations.
namespace besi::kernels {

/// Raw (unreferenced) sphere lead field, m x (n*d), microvolts per nA*m.
Matrix sphere_leadfield_serial(const SphereHeadModel& model, const SourceSpace& space);
Matrix sphere_leadfield_omp(const SphereHeadModel& model, const SourceSpace& space);

/// Subtracts each column's electrode mean in place.
void average_reference(Matrix& lead_field);

/// Index of and distance to the nearest row of `to` for every row of `from`
/// (both n x 3). Ties resolve to the lowest index.
void nearest_neighbours_serial(const Matrix& from, const Matrix& to, std::vector<Index>& index,
                               std::vector<double>& distance);
void nearest_neighbours_omp(const Matrix& from, const Matrix& to, std::vector<Index>& index,
                            std::vector<double>& distance);

/// Number of threads the OpenMP kernels will use (1 without OpenMP).
int thread_count();
/// Sets the OpenMP thread count; values < 1 are ignored.
void set_thread_count(int threads);

}  // namespace besi::kernels
