#pragma once

// Batched cosine and sine. Compiled separately so the loops can use the C
// library's vector math routines; results may differ from std::cos in the
// last ulp but are deterministic for a given machine.

#ifdef __cplusplus
extern "C" {
#endif

void stableflow_cos(const double* phase, double* c, int n);
void stableflow_sincos(const double* phase, double* c, double* s, int n);

#ifdef __cplusplus
}
#endif
