#include "vecmath.h"

#include <math.h>

#if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
#define STABLEFLOW_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define STABLEFLOW_CLONES
#endif

STABLEFLOW_CLONES void stableflow_cos(const double* restrict phase, double* restrict c, int n) {
  for (int i = 0; i < n; ++i) c[i] = cos(phase[i]);
}

STABLEFLOW_CLONES void stableflow_sincos(const double* restrict phase, double* restrict c, double* restrict s,
                                         int n) {
  for (int i = 0; i < n; ++i) c[i] = cos(phase[i]);
  for (int i = 0; i < n; ++i) s[i] = sin(phase[i]);
}
