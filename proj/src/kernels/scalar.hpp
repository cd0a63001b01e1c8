#pragma once

#include "trajzoom/kernels.hpp"

namespace trajzoom::kernels::scalar {

void em_advance(EmLanes state, const double* xi, std::size_t steps, const EmCoefficients& c,
                EmRecord record);
void reflect_advance(ReflectLanes state, const double* db, BridgeUniforms uniforms, std::size_t steps,
                     const ReflectionParams& params, ReflectRecord record);
/// Scalar reference restricted to lanes [first_lane, state.lanes).
void reflect_lanes_scalar(ReflectLanes state, const double* db, BridgeUniforms uniforms, std::size_t steps,
                          const ReflectionParams& params, ReflectRecord record, std::size_t first_lane);
double sum_squared_increments(const double* q, std::size_t n);
std::size_t count_in_window(const double* q, std::size_t n, double lo, double hi);
void linear_entropy(const double* q, double* out, std::size_t n);

}  // namespace trajzoom::kernels::scalar

namespace trajzoom::kernels::avx2 {
const KernelTable* table();  // nullptr when not compiled in
}

namespace trajzoom::kernels::neon {
const KernelTable* table();  // nullptr when not compiled in
}
