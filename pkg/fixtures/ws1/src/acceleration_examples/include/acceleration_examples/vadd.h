#pragma once
// host-side view of the vadd kernel signature
void vadd(const int *a, const int *b, int *c, int n);
